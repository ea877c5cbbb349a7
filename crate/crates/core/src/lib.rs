//! Reducing QUBO coupling density by factoring semi-symmetric variable pairs
//! into ancilla variables.
//!
//! The crate covers the whole pipeline: graph instances, penalty encodings of
//! four graph problems, the factoring procedure, an exhaustive verifier for
//! the reduced energy landscape, and classical solvers.
//!
//! ```
//! use semisym_core::{encode_max_clique, factor_semi_symmetries, Graph, Penalty, ZMode};
//!
//! let g = Graph::from_edges(6, [(0, 2), (0, 3), (0, 5), (1, 3), (2, 5), (3, 4)]).unwrap();
//! let q = encode_max_clique(&g, Penalty::new(3.into()).unwrap()).unwrap().qubo;
//! let (reduced, trace) = factor_semi_symmetries(&q, 1, ZMode::Fixed(3.into())).unwrap();
//! assert_eq!((q.num_couplings(), reduced.num_couplings()), (9, 8));
//! assert_eq!(trace.steps[0].syms, vec![0, 2, 5]);
//! ```

pub mod encode;
pub mod error;
pub mod graph;
pub mod qubo;
pub mod reduce;
pub mod solve;
pub mod verify;

pub use encode::{
    decode_and_validate, encode_graph_coloring, encode_graph_isomorphism, encode_hamilton_cycles,
    encode_max_clique, Decoded, Encoded, Penalty, Problem, ProblemKind, Semantic, Solution,
    VariableMap,
};
pub use error::{Error, Result};
pub use graph::{random_permutation, Graph};
pub use qubo::{
    parse_rational, Assignment, QuboMatrix, QuboStats, Rational, Spectrum, DEFAULT_ENUMERATION_CAP,
};
pub use reduce::{
    conflict_list, enhance, factor_semi_symmetries, most_symmetric_pair, ConflictList,
    ReductionTrace, Step, SymmetricPair, ZMode,
};
pub use solve::{
    exhaustive_solve, projected_success, simulated_anneal, AnnealParams, Method, Schedule,
    SolveResult,
};
pub use verify::{
    best_ancilla_energy, certify_step, classify_solution, project_assignment, verify_equivalence,
    CaseCheck, EquivalenceReport, Validity, VerifyLimits, DEFAULT_ANCILLA_CAP,
};
