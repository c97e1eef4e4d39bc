pub mod eigen;
pub mod lanczos;
pub mod power;
pub mod solve;
pub mod sparse;

pub use eigen::{dense_eigen, DenseSymmetricMatrix, EigenDecomposition, MAX_DIM};
pub use lanczos::{lanczos_extremes, LanczosOptions, LanczosResult};
pub use power::{power_iteration_sym, top_k_sym, PowerOptions, PowerResult};
pub use solve::{solve_spd, SolverKind, SpdSolver, DEFAULT_TOL};
pub use sparse::{dot, norm2, wdot, SymSparse, TripletBuilder};
