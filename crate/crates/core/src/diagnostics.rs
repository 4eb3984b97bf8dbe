//! Non-fatal events recorded while evaluating a closed form.

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    Clamped { excursion: f64 },
    /// At least one backhaul expectation fell back to quadrature; `condition`
    /// is the worst partial-fraction cancellation factor seen.
    BackhaulQuadratureFallback { condition: f64 },
    SymmetricPerturbation { delta_db: f64 },
    /// The β-weighted eEi sum cancelled too strongly at some node and the
    /// integral representation was used; `condition` is the worst factor seen.
    RecursionFallback { condition: f64 },
    /// Degenerate destination coefficients at `nodes` κ_b nodes were jittered.
    NodeJitter { nodes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Adds `d` to `list`, merging worst-case and counting variants.
pub(crate) fn push(list: &mut Vec<Diagnostic>, d: Diagnostic) {
    use Diagnostic::*;
    for e in list.iter_mut() {
        match (e, &d) {
            (BackhaulQuadratureFallback { condition: w }, BackhaulQuadratureFallback { condition })
            | (RecursionFallback { condition: w }, RecursionFallback { condition }) => {
                *w = w.max(*condition);
                return;
            }
            (NodeJitter { nodes: n }, NodeJitter { nodes }) => {
                *n += nodes;
                return;
            }
            (e, d) if *e == *d => return,
            _ => {}
        }
    }
    list.push(d);
}
