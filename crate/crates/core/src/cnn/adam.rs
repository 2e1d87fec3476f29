use super::config::TrainConfig;
use super::model::{Gradients, Model};
use crate::error::{Error, Result};

/// One bias-corrected Adam update; the step counter advances once per call.
pub fn adam_step(model: &mut Model, grads: &Gradients, tc: &TrainConfig) -> Result<()> {
    if grads.0.len() != model.params.len()
        || grads
            .0
            .iter()
            .zip(&model.params)
            .any(|(g, p)| g.len() != p.values.len())
    {
        return Err(Error::ShapeMismatch {
            expected: "gradients shaped like the parameters".into(),
            found: format!("{} arrays", grads.0.len()),
        });
    }
    let (b1, b2, eps, lr) = (tc.adam_beta1, tc.adam_beta2, tc.adam_epsilon, tc.learning_rate);
    let state = &mut model.adam;
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    for (i, p) in model.params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, theta) in p.values.iter_mut().enumerate() {
            let g = grads.0[i][j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
