//! Criterion benchmarks for the solver, estimators, and equilibrium oracle live in `benches/`.
