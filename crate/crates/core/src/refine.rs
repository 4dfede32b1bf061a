//! Gated-residual depth refinement.
//!
//! A gate map `g ∈ [0, 1]` marks soft-boundary pixels with values below one.
//! [`gated_residual`] keeps the base depth where the gate is open and swaps in
//! the residual prediction elsewhere. Gate and residual come from any
//! producer: a trained network via files, or [`oracle_gate_and_residual`],
//! which derives both from a ground-truth alpha matte and depth.

use crate::curation::{blend, check_unit_interval};
use crate::error::Result;
use crate::imagecore::{ensure_same_dims, threshold_band, BinaryMask, ScalarMap};

/// `d̂ = d_in·g + d_res·(1 − g)`. The result keeps `d_in`'s convention.
pub fn gated_residual(d_in: &ScalarMap, d_res: &ScalarMap, g: &ScalarMap) -> Result<ScalarMap> {
    ensure_same_dims("gated_residual", d_in.dims(), d_res.dims())?;
    ensure_same_dims("gated_residual", d_in.dims(), g.dims())?;
    check_unit_interval(g, "gate")?;
    let data = d_in
        .data()
        .iter()
        .zip(d_res.data())
        .zip(g.data())
        .map(|((a, r), w)| blend(*w, *a, *r))
        .collect();
    ScalarMap::new(d_in.width(), d_in.height(), data, d_in.convention())
}

/// Ground-truth stand-in for a learned fixer: the gate closes exactly on the
/// soft band `alpha_min < α < alpha_max` and the residual is the true depth.
pub fn oracle_gate_and_residual(
    alpha: &ScalarMap,
    d_gt: &ScalarMap,
    alpha_min: f64,
    alpha_max: f64,
) -> Result<(ScalarMap, ScalarMap)> {
    ensure_same_dims("oracle_gate_and_residual", alpha.dims(), d_gt.dims())?;
    check_unit_interval(alpha, "alpha")?;
    let band = threshold_band(alpha, alpha_min, alpha_max)?;
    let gate = band.not().to_map();
    Ok((gate, d_gt.clone()))
}

/// Pixels whose gate is strictly below `one_minus_eps`; with `1.0` this is
/// the region the gate hands over to the residual.
pub fn refinement_region(g: &ScalarMap, one_minus_eps: f64) -> BinaryMask {
    BinaryMask::from_fn(g.width(), g.height(), |x, y| g.get(x, y) < one_minus_eps)
}

/// Convenience gate from a mask: zero on the mask, one elsewhere.
pub fn gate_from_region(region: &BinaryMask) -> ScalarMap {
    region.not().to_map()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::imagecore::DepthConvention;

    fn map(w: usize, h: usize, data: Vec<f64>) -> ScalarMap {
        ScalarMap::new(w, h, data, DepthConvention::Unitless).unwrap()
    }

    #[test]
    fn gate_endpoints_and_midpoint() {
        let d_in = map(2, 1, vec![2.0, 5.0]);
        let d_res = map(2, 1, vec![4.0, 1.0]);
        assert_eq!(gated_residual(&d_in, &d_res, &map(2, 1, vec![1.0; 2])).unwrap(), d_in);
        assert_eq!(gated_residual(&d_in, &d_res, &map(2, 1, vec![0.0; 2])).unwrap(), d_res);
        let mid = gated_residual(&map(1, 1, vec![2.0]), &map(1, 1, vec![4.0]), &map(1, 1, vec![0.5])).unwrap();
        assert_eq!(mid.data(), &[3.0]);
        assert!(matches!(
            gated_residual(&d_in, &d_res, &map(2, 1, vec![1.2, 0.0])),
            Err(Error::InvalidValue(_))
        ));
    }

    #[test]
    fn oracle_on_binary_and_flat_mattes() {
        let d_gt = map(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let (g, r) = oracle_gate_and_residual(&map(2, 2, vec![0.0, 1.0, 1.0, 0.0]), &d_gt, 0.02, 0.98).unwrap();
        assert!(g.data().iter().all(|v| *v == 1.0));
        assert_eq!(r, d_gt);
        let (g, r) = oracle_gate_and_residual(&map(2, 2, vec![0.5; 4]), &d_gt, 0.02, 0.98).unwrap();
        assert!(g.data().iter().all(|v| *v == 0.0));
        assert_eq!(gated_residual(&map(2, 2, vec![9.0; 4]), &r, &g).unwrap(), d_gt);
    }

    #[test]
    fn mixed_matte_replaces_only_the_band() {
        let alpha = map(4, 4, (0..16).map(|i| [0.0, 0.3, 0.7, 1.0][i % 4]).collect());
        let d_gt = map(4, 4, (0..16).map(|i| i as f64).collect());
        let d_in = map(4, 4, vec![100.0; 16]);
        let (g, r) = oracle_gate_and_residual(&alpha, &d_gt, 0.02, 0.98).unwrap();
        let out = gated_residual(&d_in, &r, &g).unwrap();
        for i in 0..16 {
            let expect = if matches!(i % 4, 1 | 2) { i as f64 } else { 100.0 };
            assert_eq!(out.data()[i], expect);
        }
    }

    #[test]
    fn region_is_strict() {
        assert!(refinement_region(&map(3, 1, vec![1.0; 3]), 1.0).none_set());
        assert!(refinement_region(&map(3, 1, vec![0.999; 3]), 1.0).all_set());
        assert_eq!(
            refinement_region(&map(3, 1, vec![1.0, 0.5, 0.0]), 1.0).data(),
            &[false, true, true]
        );
        let region = BinaryMask::new(3, 1, vec![false, true, false]).unwrap();
        assert_eq!(refinement_region(&gate_from_region(&region), 1.0), region);
    }
}
