"""HTTP service exposing runs, audits and convergence studies."""
