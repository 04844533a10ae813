use crate::error::{Error, Result};
use crate::profile::Field;

/// Zero crossings of `u`, located by linear interpolation. A crossing closer
/// than 4Δx to the previously accepted one is treated as noise and dropped.
pub fn extract_layers(u: &Field) -> Result<Vec<f64>> {
    if u.sup_norm() <= 0.5 {
        return Err(Error::NoLayers);
    }
    let dx = u.dx();
    let mut out: Vec<f64> = Vec::new();
    for i in 0..u.u.len() - 1 {
        let (a, b) = (u.u[i], u.u[i + 1]);
        // a zero node counts once, with the interval to its right
        if !((a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)) {
            continue;
        }
        let x = u.x[i] + dx * a / (a - b);
        if out.last().is_some_and(|&p| x - p < 4.0 * dx) {
            continue;
        }
        out.push(x);
    }
    if out.is_empty() {
        return Err(Error::NoLayers);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::quartic_potential;
    use crate::profile::{build_uh, LayerVector, ProfileParams};

    #[test]
    fn recovers_uh_positions() {
        let pot = quartic_potential();
        let params = ProfileParams::new(0.05, 0.5, 0.05, 1).unwrap();
        let h = LayerVector::new(vec![0.3137, 0.7021]).unwrap();
        let u = build_uh(&h, &params, &pot, 400).unwrap();
        let found = extract_layers(&u).unwrap();
        assert_eq!(found.len(), 2);
        for (a, b) in found.iter().zip(h.positions()) {
            assert!((a - b).abs() < u.dx(), "{a} {b}");
        }
    }

    #[test]
    fn constant_sign_has_no_layers() {
        assert!(matches!(extract_layers(&Field::from_fn(50, |_| 1.0)), Err(Error::NoLayers)));
        assert!(matches!(extract_layers(&Field::from_fn(50, |x| 0.1 * (x - 0.5))), Err(Error::NoLayers)));
    }

    #[test]
    fn noise_guard() {
        let n = 100;
        let mut u = Field::from_fn(n, |x| if x < 0.5 { -1.0 } else { 1.0 });
        // a spurious wiggle two cells after the front
        u.u[52] = -0.1;
        let found = extract_layers(&u).unwrap();
        assert_eq!(found.len(), 1);
    }
}
