//! Central finite-difference verification of tape gradients.

use serde::Serialize;

use crate::autograd::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ParamError {
    pub name: String,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientReport {
    pub op_name: String,
    pub max_rel_error: f64,
    pub per_parameter: Vec<ParamError>,
}

/// Compares the analytic gradient of `forward` against central differences
/// for every entry of the listed parameters.
///
/// Relative error per entry is `|a − n| / max(1, |a|, |n|)`.
pub fn grad_check<F>(
    op_name: &str,
    store: &mut ParamStore,
    params: &[ParamId],
    eps: f64,
    forward: F,
) -> Result<GradientReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(store);
        let loss = forward(&mut tape)?;
        tape.backward(loss)?
    };

    let eval = |store: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(store);
        let loss = forward(&mut tape)?;
        let v = tape.value(loss).data()[0];
        if !v.is_finite() {
            return Err(Error::Numeric(format!("{op_name}: non-finite loss")));
        }
        Ok(v)
    };

    let mut per_parameter = Vec::with_capacity(params.len());
    for &id in params {
        let n = store.get(id).value.len();
        let zeros = vec![0.0; n];
        let grad = analytic
            .param(id)
            .map_or(zeros.as_slice(), |g| g.data())
            .to_vec();
        let mut worst = 0.0f64;
        for i in 0..n {
            let orig = store.get(id).value.data()[i];
            store.get_mut(id).value.data_mut()[i] = orig + eps;
            let up = eval(store);
            store.get_mut(id).value.data_mut()[i] = orig - eps;
            let down = eval(store);
            store.get_mut(id).value.data_mut()[i] = orig;
            let numeric = (up? - down?) / (2.0 * eps);
            let a = grad[i];
            let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            worst = worst.max(rel);
        }
        per_parameter.push(ParamError {
            name: store.get(id).name.clone(),
            max_rel_error: worst,
        });
    }
    let max_rel_error = per_parameter
        .iter()
        .map(|p| p.max_rel_error)
        .fold(0.0, f64::max);
    Ok(GradientReport {
        op_name: op_name.to_string(),
        max_rel_error,
        per_parameter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn linear_sum_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let w = store.insert("w", random(&mut rng, &[3, 4])).unwrap();
        let b = store.insert("b", random(&mut rng, &[4])).unwrap();
        let x = random(&mut rng, &[5, 3]);
        let report = grad_check("linear", &mut store, &[w, b], 1e-5, |t| {
            let xv = t.leaf(x.clone());
            let (wv, bv) = (t.param(w), t.param(b));
            let y = t.linear(xv, wv, bv)?;
            Ok(t.sum(y))
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
        assert_eq!(report.per_parameter.len(), 2);
    }

    #[test]
    fn elu_away_from_kink() {
        let mut store = ParamStore::new();
        let x = store
            .insert("x", Tensor::vector(vec![-2.0, -0.5, 0.7, 1.9, -1.2]))
            .unwrap();
        let report = grad_check("elu", &mut store, &[x], 1e-5, |t| {
            let v = t.param(x);
            let y = t.elu(v);
            Ok(t.sum(y))
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }

    #[test]
    fn every_op_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut store = ParamStore::new();
        let a = store.insert("a", random(&mut rng, &[3, 4])).unwrap();
        let g = store.insert("g", random(&mut rng, &[4])).unwrap();
        let bias = store.insert("bias", random(&mut rng, &[4])).unwrap();
        let table = store.insert("table", random(&mut rng, &[5, 4])).unwrap();
        let w = store.insert("w", random(&mut rng, &[3, 1])).unwrap();
        let mix = random(&mut rng, &[3, 4]);
        let report = grad_check(
            "mixed",
            &mut store,
            &[a, g, bias, table, w],
            1e-5,
            |t| {
                let av = t.param(a);
                let ln = {
                    let (gv, bv) = (t.param(g), t.param(bias));
                    t.layer_norm(av, gv, bv, 1e-5)?
                };
                let sm = t.softmax(ln, 1)?;
                let sm0 = t.softmax(av, 0)?;
                let sg = t.sigmoid(av);
                let tv = t.param(table);
                let rows = t.gather_rows(tv, &[4, 0, 4])?;
                let wv = t.param(w);
                let scaled = t.mul_col(rows, wv)?;
                let m = t.leaf(mix.clone());
                let p1 = t.mul(sm, m)?;
                let p2 = t.add(p1, sm0)?;
                let p3 = t.add(p2, sg)?;
                let p4 = t.add(p3, scaled)?;
                let cc = t.concat_cols(&[p4, sm])?;
                let sl = t.slice_cols(cc, 2, 4)?;
                let tr = t.transpose(sl);
                let prod = t.matmul(sl, tr)?;
                let el = t.elu(prod);
                let rows = t.concat_rows(&[el, el])?;
                let logits = t.scale(rows, 0.7);
                let mut target = Tensor::zeros(&[6, 3]);
                for r in 0..6 {
                    target.data_mut()[r * 3 + r % 3] = 0.6;
                    target.data_mut()[r * 3 + (r + 1) % 3] = 0.4;
                }
                t.soft_cross_entropy(logits, target, vec![0.5, 0.1, 0.2, 0.3, 0.0, 1.0])
            },
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut store = ParamStore::new();
        let x = store.insert("x", Tensor::vector(vec![f64::NAN])).unwrap();
        let out = grad_check("nan", &mut store, &[x], 1e-5, |t| {
            let v = t.param(x);
            Ok(t.sum(v))
        });
        assert!(matches!(out, Err(Error::Numeric(_))));
    }
}
