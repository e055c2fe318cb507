/// Central finite-difference gradient of `objective` at `params`.
pub fn finite_diff_grad<F>(mut objective: F, params: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = objective(&p);
            p[i] = orig - h;
            let down = objective(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
