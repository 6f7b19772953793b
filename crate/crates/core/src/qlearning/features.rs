use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::stack_identity_over;
use crate::packing::{packed_len, PackKind, PackedVec, SymMatrix};
use crate::scalar::Real;
use crate::system::ControlGain;

/// `φ(z) = vech(z z')`.
pub fn phi<T: Real>(z: &DVector<T>) -> PackedVec<T> {
    let mut out = DVector::zeros(packed_len(z.len()));
    phi_into(z.as_slice(), out.as_mut_slice());
    PackedVec::from_vec(out, PackKind::Vech).expect("length is triangular")
}

/// Writes `vech(z z')` into `out` without allocating.
pub(crate) fn phi_into<T: Real>(z: &[T], out: &mut [T]) {
    debug_assert_eq!(out.len(), packed_len(z.len()));
    let mut k = 0;
    for i in 0..z.len() {
        for j in i..z.len() {
            out[k] = z[i] * z[j];
            k += 1;
        }
    }
}

/// Writes `vech(z z')` for `z = [x; u]`.
pub(crate) fn phi_pair_into<T: Real>(x: &[T], u: &[T], scratch: &mut Vec<T>, out: &mut [T]) {
    scratch.clear();
    scratch.extend_from_slice(x);
    scratch.extend_from_slice(u);
    phi_into(scratch, out);
}

/// `κ = [I; L] D [I; L]'`, an `(n+m) x (n+m)` PSD matrix with
/// `vech(κ)' vecs(H) = tr(H κ)`.
pub fn kappa<T: Real>(gain: &ControlGain<T>, d: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    if gain.state_dim() != d.dim() {
        return Err(Error::dimension(
            "kappa: gain columns vs D",
            d.dim(),
            gain.state_dim(),
        ));
    }
    let s: DMatrix<T> = stack_identity_over(gain.matrix());
    SymMatrix::symmetric_part(&(&s * d.matrix() * s.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{vech, vecs};

    #[test]
    fn phi_examples() {
        assert_eq!(
            phi(&DVector::from_vec(vec![1.0, 2.0])).data().as_slice(),
            &[1.0, 2.0, 4.0]
        );
        assert_eq!(phi(&DVector::<f64>::zeros(3)).data().as_slice(), &[0.0; 6]);
    }

    #[test]
    fn phi_pairs_with_vecs_as_a_quadratic_form() {
        let z = DVector::<f64>::from_vec(vec![0.3, -1.2, 2.0]);
        let h = SymMatrix::from_row_slice(3, &[2.0, 0.5, -1.0, 0.5, 1.0, 0.25, -1.0, 0.25, 3.0])
            .unwrap();
        let direct = z.dot(&(h.matrix() * &z));
        assert!((phi(&z).dot(&vecs(&h)) - direct).abs() < 1e-12);
    }

    #[test]
    fn kappa_examples() {
        let d = SymMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let k = kappa(&ControlGain::zeros(1, 2), &d).unwrap();
        let mut expected = DMatrix::zeros(3, 3);
        expected.view_mut((0, 0), (2, 2)).copy_from(d.matrix());
        assert_eq!(k.matrix(), &expected);

        let k = kappa(
            &ControlGain::new(DMatrix::identity(2, 2)),
            &SymMatrix::identity(2),
        )
        .unwrap();
        let ones = DMatrix::from_fn(4, 4, |i, j| if i % 2 == j % 2 { 1.0 } else { 0.0 });
        assert_eq!(k.matrix(), &ones);

        let err = kappa(&ControlGain::zeros(1, 3), &SymMatrix::<f64>::identity(2));
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn kappa_term_is_a_trace() {
        let l = ControlGain::new(DMatrix::from_row_slice(1, 2, &[-0.4, 0.7]));
        let d = SymMatrix::from_row_slice(2, &[1.0, 0.2, 0.2, 0.5]).unwrap();
        let k = kappa(&l, &d).unwrap();
        let h =
            SymMatrix::from_row_slice(3, &[2.0, 0.1, 0.3, 0.1, 1.0, -0.2, 0.3, -0.2, 4.0]).unwrap();
        let tr: f64 = (h.matrix() * k.matrix()).trace();
        assert!((vech(&k).dot(&vecs(&h)) - tr).abs() < 1e-12);
    }
}
