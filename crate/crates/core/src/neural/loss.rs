use ndarray::{Array2, ArrayView2};

use super::NeuralError;

fn check(predictions: &ArrayView2<'_, f64>, targets: &ArrayView2<'_, f64>) -> Result<(), NeuralError> {
    if predictions.dim() != targets.dim() {
        return Err(NeuralError::ShapeMismatch(format!(
            "predictions {:?} vs targets {:?}",
            predictions.dim(),
            targets.dim()
        )));
    }
    if predictions.is_empty() {
        return Err(NeuralError::EmptyInput);
    }
    Ok(())
}

/// Mean of squared differences over every element.
pub fn mse_loss(predictions: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> Result<f64, NeuralError> {
    check(&predictions, &targets)?;
    let sum: f64 = predictions
        .iter()
        .zip(targets.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// `∂ mse / ∂ predictions`.
pub fn mse_grad(predictions: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> Result<Array2<f64>, NeuralError> {
    check(&predictions, &targets)?;
    let n = predictions.len() as f64;
    Ok((&predictions - &targets) * (2.0 / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let t = array![[1.0, 1.0]];
        assert_eq!(mse_loss(t.view(), t.view()).unwrap(), 0.0);
        assert_eq!(mse_loss(array![[0.0, 0.0]].view(), t.view()).unwrap(), 1.0);
        assert_eq!(mse_loss(array![[0.0, 0.0]].view(), array![[0.0, 3.0]].view()).unwrap(), 4.5);
    }

    #[test]
    fn errors() {
        let a = Array2::<f64>::zeros((2, 1));
        let b = Array2::<f64>::zeros((1, 2));
        assert!(matches!(mse_loss(a.view(), b.view()), Err(NeuralError::ShapeMismatch(_))));
        let e = Array2::<f64>::zeros((0, 1));
        assert!(matches!(mse_loss(e.view(), e.view()), Err(NeuralError::EmptyInput)));
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let p = array![[0.3, -1.2], [2.0, 0.5]];
        let t = array![[0.0, 1.0], [1.5, 0.5]];
        let g = mse_grad(p.view(), t.view()).unwrap();
        let h = 1e-6;
        for idx in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let mut up = p.clone();
            up[idx] += h;
            let mut dn = p.clone();
            dn[idx] -= h;
            let fd = (mse_loss(up.view(), t.view()).unwrap() - mse_loss(dn.view(), t.view()).unwrap()) / (2.0 * h);
            assert!((fd - g[idx]).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn non_negative_and_zero_only_on_equality(
            p in prop::collection::vec(-10.0f64..10.0, 1..20),
            delta in prop::collection::vec(-1.0f64..1.0, 20),
        ) {
            let pred = Array2::from_shape_vec((1, p.len()), p.clone()).unwrap();
            let targ = Array2::from_shape_vec((1, p.len()), p.iter().zip(&delta).map(|(a, d)| a + d).collect()).unwrap();
            let loss = mse_loss(pred.view(), targ.view()).unwrap();
            prop_assert!(loss >= 0.0);
            let any_diff = pred.iter().zip(targ.iter()).any(|(a, b)| a != b);
            prop_assert_eq!(loss == 0.0, !any_diff);
        }
    }
}
