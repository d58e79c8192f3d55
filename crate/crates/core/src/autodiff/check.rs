use super::{AutodiffError, Tape, Tensor, Var};

/// `|a − b| / max(|a|, |b|, 1e-12)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

/// Compares the taped gradient of `forward` at `x` with central differences
/// of step `eps`, returning the worst coordinate's [`relative_error`].
///
/// `forward` receives a fresh tape and the leaf holding its input and must
/// return a `1 × 1` result. Any randomness inside it must be frozen.
pub fn grad_check<F>(forward: F, x: &Tensor, eps: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, AutodiffError>,
{
    let eval = |input: Tensor| -> Result<f64, AutodiffError> {
        let mut tape = Tape::new();
        let leaf = tape.leaf(input);
        let out = forward(&mut tape, leaf)?;
        let value = tape
            .value(out)
            .as_scalar()
            .ok_or(AutodiffError::NotScalar(tape.shape(out)))?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(AutodiffError::NonFinite { op: "grad_check", index: 0 })
        }
    };

    let mut tape = Tape::new();
    let leaf = tape.leaf(x.clone());
    let out = forward(&mut tape, leaf)?;
    let analytic = tape.backward(out)?.take(leaf).expect("leaf registered");

    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += eps;
        let mut minus = x.clone();
        minus.data_mut()[i] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        worst = worst.max(relative_error(analytic.data()[i], numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let err = grad_check(
            |t, x| {
                let sq = t.mul(x, x)?;
                t.sum_all(sq)
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let x = Tensor::from_rows(&[vec![0.5, -1.0]]).unwrap();
        let err = grad_check(
            |t, _x| {
                let c = t.constant(Tensor::scalar(3.0)?);
                t.sigmoid(c)
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert_eq!(err, 0.0);
    }
}
