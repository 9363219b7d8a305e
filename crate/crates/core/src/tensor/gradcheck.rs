use super::{ParamId, ParameterStore, Tape, TensorError, Var};

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
}

/// Compare the tape gradient of `loss` against central differences for every
/// scalar of `params`. Relative error is taken only where the absolute error
/// exceeds the rounding noise of the difference quotient. `loss` builds the forward pass on a fresh tape; it must
/// be deterministic.
pub fn check_gradients<F>(store: &mut ParameterStore, params: &[ParamId], eps: f64, loss: F) -> Result<GradCheck, TensorError>
where
    F: Fn(&mut Tape) -> Result<Var, TensorError>,
{
    let analytic = {
        let mut tape = Tape::new(store, false, 0);
        let l = loss(&mut tape)?;
        tape.backward(l)?
    };
    let eval = |store: &ParameterStore| -> Result<f64, TensorError> {
        let mut tape = Tape::new(store, false, 0);
        let l = loss(&mut tape)?;
        Ok(tape.value(l).item())
    };
    let mut out = GradCheck {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        checked: 0,
    };
    for &id in params {
        let n = store.value(id).data().len();
        let grad = analytic.get(id).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
        for (k, &g) in grad.iter().enumerate() {
            let orig = store.value(id).data()[k];
            store.value_mut(id).data_mut()[k] = orig + eps;
            let up = eval(store)?;
            store.value_mut(id).data_mut()[k] = orig - eps;
            let down = eval(store)?;
            store.value_mut(id).data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let abs = (numeric - g).abs();
            let rel = abs / numeric.abs().max(g.abs()).max(1e-8);
            out.max_abs_error = out.max_abs_error.max(abs);
            // Below the rounding noise of the difference quotient only the
            // absolute error is meaningful.
            let noise = 4.0 * f64::EPSILON * up.abs().max(down.abs()).max(1.0) / (2.0 * eps);
            if abs > noise.max(1e-9) {
                out.max_rel_error = out.max_rel_error.max(rel);
            }
            out.checked += 1;
        }
    }
    Ok(out)
}
