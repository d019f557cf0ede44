use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("basis dimension {dim} exceeds the capacity budget of {budget} states")]
    CapacityExceeded { dim: u128, budget: usize },
    #[error("occupation {occ:?} does not belong to a basis with N={n}, M={m}")]
    InvalidOccupation { occ: Vec<u32>, n: u32, m: usize },
    #[error("operands refer to different Fock bases")]
    BasisMismatch,
    #[error("mode index {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("matrix is not unitary: deviation {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not Hermitian: deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("state is not normalized: |norm^2 - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },
    #[error("density operator trace {trace:.6} does not match expected weight {expected:.6}")]
    TraceMismatch { trace: f64, expected: f64 },
    #[error("density operator fails positivity: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("ring geometry requires 3 modes, basis has {modes}")]
    UnsupportedGeometry { modes: usize },
    #[error("{kind} gate hold time {got:.6e} s does not match the required {expected:.6e} s")]
    GateHoldMismatch {
        kind: &'static str,
        got: f64,
        expected: f64,
    },
    #[error("scheme 2 requires an even atom number, got {n}")]
    OddAtomNumber { n: u32 },
    #[error("physical quantum beam splitter requires an interaction strength V > 0")]
    MissingInteraction,
    #[error("transmissivity {eta} outside [0, 1]")]
    EtaOutOfRange { eta: f64 },
    #[error("Fisher information {qfi:.3e} carries no phase information")]
    NoInformation { qfi: f64 },
    #[error("empty sample")]
    EmptySample,
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("eigensolver failed with LAPACK status {info}")]
    LapackFailure { info: i32 },
}
