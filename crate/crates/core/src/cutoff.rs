//! Smooth cutoffs with analytic derivatives, used as test functions in the
//! local energy balance.

/// `S(x) = f(x) / (f(x) + f(1 - x))` with `f(y) = exp(-1/y)`, and its first
/// two derivatives.
pub fn step_jet(x: f64) -> [f64; 3] {
    if x <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if x >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let f = |y: f64| [(-1.0 / y).exp(), (-1.0 / y).exp() / (y * y), (-1.0 / y).exp() * (1.0 - 2.0 * y) / y.powi(4)];
    let g = f(x);
    let h0 = f(1.0 - x);
    let h = [h0[0], -h0[1], h0[2]];
    let d = [g[0] + h[0], g[1] + h[1], g[2] + h[2]];
    let s = g[0] / d[0];
    let num1 = g[1] * d[0] - g[0] * d[1];
    let s1 = num1 / (d[0] * d[0]);
    let s2 = (g[2] * d[0] - g[0] * d[2]) / (d[0] * d[0]) - 2.0 * d[1] * num1 / d[0].powi(3);
    [s, s1, s2]
}

/// Value and derivatives of a test function at one space-time point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dt: f64,
    pub grad: [f64; 3],
    pub lap: f64,
}

/// Smooth nonnegative weight `phi(x, t)`.
pub trait TestFunction: Sync {
    fn jet(&self, x: [f64; 3], t: f64) -> Jet;
}

/// Radial profile `eta(r)`: 1 for `r <= r_flat`, 0 for `r >= r_out`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialCutoff {
    pub r_flat: f64,
    pub r_out: f64,
}

impl RadialCutoff {
    /// `[eta, eta', eta'']` at radius `r`.
    pub fn profile(&self, r: f64) -> [f64; 3] {
        let w = self.r_out - self.r_flat;
        let [s, s1, s2] = step_jet((r - self.r_flat) / w);
        [1.0 - s, -s1 / w, -s2 / (w * w)]
    }

    /// Value, gradient and Laplacian of `eta(|x - c|)`.
    pub fn spatial(&self, x: [f64; 3], c: [f64; 3]) -> (f64, [f64; 3], f64) {
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let [e, e1, e2] = self.profile(r);
        if r <= self.r_flat || r >= self.r_out {
            return (e, [0.0; 3], 0.0);
        }
        (e, [e1 * d[0] / r, e1 * d[1] / r, e1 * d[2] / r], e2 + 2.0 * e1 / r)
    }

    /// Hessian `d_i d_j eta(|x - c|)`.
    pub fn hessian(&self, x: [f64; 3], c: [f64; 3]) -> [[f64; 3]; 3] {
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let mut h = [[0.0; 3]; 3];
        if r <= self.r_flat || r >= self.r_out {
            return h;
        }
        let [_, e1, e2] = self.profile(r);
        for i in 0..3 {
            for j in 0..3 {
                let nn = d[i] * d[j] / (r * r);
                h[i][j] = e2 * nn + e1 / r * (if i == j { 1.0 } else { 0.0 } - nn);
            }
        }
        h
    }
}

/// `phi(x, t) = eta(|x - c|) exp(-decay t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimeCutoff {
    pub center: [f64; 3],
    pub radial: RadialCutoff,
    pub decay: f64,
}

impl TestFunction for SpaceTimeCutoff {
    fn jet(&self, x: [f64; 3], t: f64) -> Jet {
        let (e, g, l) = self.radial.spatial(x, self.center);
        let tf = (-self.decay * t).exp();
        Jet { value: e * tf, dt: -self.decay * e * tf, grad: g.map(|v| v * tf), lap: l * tf }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_derivatives_match_differences() {
        let h = 1e-5;
        for x in [0.1, 0.3, 0.5, 0.77, 0.95] {
            let [_, d1, d2] = step_jet(x);
            let fd1 = (step_jet(x + h)[0] - step_jet(x - h)[0]) / (2.0 * h);
            let fd2 = (step_jet(x + h)[1] - step_jet(x - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7, "{x}");
            assert!((d2 - fd2).abs() < 1e-5, "{x}");
        }
        assert_eq!(step_jet(0.5)[0], 0.5);
    }

    #[test]
    fn laplacian_matches_differences() {
        let c = RadialCutoff { r_flat: 0.5, r_out: 1.5 };
        let x = [0.4, 0.6, -0.3];
        let h = 1e-4;
        let mut fd = 0.0;
        for a in 0..3 {
            let (mut p, mut m) = (x, x);
            p[a] += h;
            m[a] -= h;
            fd += (c.spatial(p, [0.0; 3]).0 - 2.0 * c.spatial(x, [0.0; 3]).0 + c.spatial(m, [0.0; 3]).0) / (h * h);
        }
        assert!((c.spatial(x, [0.0; 3]).2 - fd).abs() < 1e-5);
        let hs = c.hessian(x, [0.0; 3]);
        assert!((hs[0][0] + hs[1][1] + hs[2][2] - c.spatial(x, [0.0; 3]).2).abs() < 1e-12);
        let (mut p, mut m) = (x, x);
        p[1] += h;
        m[1] -= h;
        let fd01 = (c.spatial(p, [0.0; 3]).1[0] - c.spatial(m, [0.0; 3]).1[0]) / (2.0 * h);
        assert!((hs[0][1] - fd01).abs() < 1e-6);
    }
}
