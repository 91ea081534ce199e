use super::FieldState;

/// Discrete energy `E_n` of the pair (`v_curr` as level `n+1`, `v_prev` as level `n`).
///
/// Conserved exactly by the implicit scheme up to the Newton residual. The quartic
/// sum skips `j = 0`, where `v = 0`.
pub fn discrete_energy(state: &FieldState) -> f64 {
    let g = &state.grid;
    let (dr, dt) = (g.dr(), g.dt());
    let (new, old) = (&state.v_curr, &state.v_prev);
    let n = new.len();
    let mut kinetic = 0.0;
    let mut gradient = 0.0;
    let mut mass = 0.0;
    let mut quartic = 0.0;
    for j in 0..n {
        let vt = (new[j] - old[j]) / dt;
        kinetic += vt * vt;
        mass += 0.5 * (new[j] * new[j] + old[j] * old[j]);
        if j + 1 < n {
            gradient += ((new[j + 1] - new[j]) / dr) * ((old[j + 1] - old[j]) / dr);
        }
        if j > 0 {
            let r = g.r(j);
            quartic += (new[j].powi(4) + old[j].powi(4)) / (8.0 * r * r);
        }
    }
    dr * (0.5 * kinetic + 0.5 * gradient + 0.5 * mass - quartic)
}
