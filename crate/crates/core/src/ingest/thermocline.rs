/// Temperature drop below the surface value that marks the thermocline, °C.
pub const THERMOCLINE_DROP_C: f64 = 2.0;

/// Depth at which temperature first falls `THERMOCLINE_DROP_C` below the
/// surface (first sample), interpolated linearly between the bracketing
/// samples. `None` if the profile never gets that cold.
pub fn thermocline_depth(profile: &[(f64, f64)]) -> Option<f64> {
    let (&(_, t_surface), _) = profile.split_first()?;
    let target = t_surface - THERMOCLINE_DROP_C;
    let k = profile.iter().position(|&(_, t)| t <= target)?;
    let (z1, t1) = profile[k];
    if t1 == target || k == 0 {
        return Some(z1);
    }
    let (z0, t0) = profile[k - 1];
    Some(z0 + (t0 - target) / (t0 - t1) * (z1 - z0))
}
