use crate::error::{Error, Result};

/// Phases of the deep holes `(o1/2, o2/2)` of Z^2 with odd `0 < o2 <= o1 <= max_odd`,
/// mirrored to negative angles (except `pi/4`) and joined with `0`.
///
/// The result is sorted, deduplicated and contained in `[-pi/4, pi/4]`.
pub fn deep_hole_phases(max_odd: u32) -> Result<Vec<f64>> {
    if max_odd < 1 || max_odd % 2 == 0 {
        return Err(Error::InvalidPhaseCodebook(format!(
            "max_odd must be a positive odd integer, got {max_odd}"
        )));
    }
    // keep reduced fractions only, so atan(1/3) and atan(3/9) coincide exactly
    let mut ratios: Vec<(u32, u32)> = Vec::new();
    for o1 in (1..=max_odd).step_by(2) {
        for o2 in (1..=o1).step_by(2) {
            let g = gcd(o1, o2);
            let r = (o2 / g, o1 / g);
            if !ratios.contains(&r) {
                ratios.push(r);
            }
        }
    }
    let mut phases = vec![0.0];
    for (num, den) in ratios {
        let phi = (num as f64 / den as f64).atan();
        phases.push(phi);
        if num != den {
            phases.push(-phi);
        }
    }
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(phases)
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
