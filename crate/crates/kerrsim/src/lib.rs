//! Steady-state engine for arrays of quadratically driven, dissipative Kerr
//! cavities.
//!
//! The crate builds truncated multi-mode Fock bases, assembles the lattice
//! Hamiltonian and Lindblad generator as sparse matrices, solves for the
//! non-equilibrium steady state (direct sparse LU, preconditioned BiCGSTAB,
//! or adaptive time integration), and evaluates the observables that expose
//! the antiferromagnetic spin analogy: first-order coherence, von Neumann
//! entropy, entanglement negativity, coherent-mixture fidelities and the
//! response to a one-photon drive. Exact spin-model references (classical
//! Ising enumeration, dense XY diagonalization) live in [`spin_ref`].

pub mod hilbert;
pub mod liouvillian;
pub mod observables;
pub mod runner;
pub mod sparse;
pub mod spin_ref;
pub mod steady_state;

pub use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("observable undefined: {0}")]
    UndefinedObservable(String),
    #[error("density matrix not positive semidefinite: min eigenvalue {0}")]
    NotPositive(f64),
    #[error("non-Hermitian input: deviation {0}")]
    NotHermitian(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
