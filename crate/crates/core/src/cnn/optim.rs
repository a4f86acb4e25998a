use super::tensor::{Scalar, Tensor};
use super::CnnError;

/// One SGD-with-momentum update: `v <- momentum * v - lr * g; w <- w + v`.
pub fn sgd_step<T: Scalar>(
    params: &mut Tensor<T>,
    grads: &Tensor<T>,
    velocity: &mut Tensor<T>,
    learning_rate: T,
    momentum: T,
) -> Result<(), CnnError> {
    if params.shape() != grads.shape() || params.shape() != velocity.shape() {
        return Err(CnnError::Shape(format!(
            "sgd shapes differ: params {:?}, grads {:?}, velocity {:?}",
            params.shape(),
            grads.shape(),
            velocity.shape()
        )));
    }
    for ((w, &g), v) in params
        .data_mut()
        .iter_mut()
        .zip(grads.data())
        .zip(velocity.data_mut().iter_mut())
    {
        *v = momentum * *v - learning_rate * g;
        *w += *v;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor<f64> {
        Tensor::from_vec(&[1], vec![v]).unwrap()
    }

    #[test]
    fn plain_step() {
        let (mut w, mut v) = (scalar(1.0), scalar(0.0));
        sgd_step(&mut w, &scalar(0.5), &mut v, 0.1, 0.0).unwrap();
        assert!((w.data()[0] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn momentum_recurrence() {
        let (mut w, mut v) = (scalar(0.0), scalar(0.0));
        sgd_step(&mut w, &scalar(1.0), &mut v, 0.1, 0.9).unwrap();
        assert!((v.data()[0] + 0.1).abs() < 1e-12 && (w.data()[0] + 0.1).abs() < 1e-12);
        sgd_step(&mut w, &scalar(1.0), &mut v, 0.1, 0.9).unwrap();
        assert!((v.data()[0] + 0.19).abs() < 1e-12 && (w.data()[0] + 0.29).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_decays_velocity() {
        let (mut w, mut v) = (scalar(2.0), scalar(0.5));
        sgd_step(&mut w, &scalar(0.0), &mut v, 0.1, 0.9).unwrap();
        assert!((v.data()[0] - 0.45).abs() < 1e-12);
        assert!((w.data()[0] - 2.45).abs() < 1e-12);
        let (mut w, mut v) = (scalar(2.0), scalar(0.0));
        sgd_step(&mut w, &scalar(0.0), &mut v, 0.1, 0.9).unwrap();
        assert_eq!(w.data()[0], 2.0);
    }

    #[test]
    fn shape_mismatch() {
        let mut w = Tensor::<f64>::zeros(&[2]);
        let mut v = Tensor::<f64>::zeros(&[2]);
        assert!(sgd_step(&mut w, &scalar(1.0), &mut v, 0.1, 0.9).is_err());
    }
}
