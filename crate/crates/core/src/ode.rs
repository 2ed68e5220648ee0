//! Adaptive Dormand–Prince 5(4) integrator that lands exactly on requested
//! output times.

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            atol: 1e-10,
            rtol: 1e-10,
            h_init: 1e-3,
            h_min: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdeStop {
    Completed,
    /// The state became invalid (left the domain) and could not be continued.
    Exit {
        t: f64,
    },
    /// Step size underflow for other reasons.
    StepFailure {
        t: f64,
    },
}

/// A first-order system `u' = f(t, u)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Writes the derivative; returns `false` when `u` is not admissible.
    fn rhs(&self, t: f64, u: &[f64], du: &mut [f64]) -> bool;

    /// Error weight for each component; the step is accepted when every
    /// `|err_i| / weight_i ≤ 1`.
    fn weights(&self, u: &[f64], opts: &OdeOptions, out: &mut [f64]) {
        for (w, v) in out.iter_mut().zip(u) {
            *w = opts.atol + opts.rtol * v.abs();
        }
    }

    /// Admissibility of a state (e.g. inside the chart).
    fn admissible(&self, _u: &[f64]) -> bool {
        true
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate from `(t0, u0)` through the increasing `outputs` (all `> t0`
/// except possibly the first, which may equal `t0`). Returns the states at
/// the outputs reached and how the run ended.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    u0: &[f64],
    outputs: &[f64],
    opts: &OdeOptions,
) -> (Vec<(f64, Vec<f64>)>, OdeStop) {
    let n = sys.dim();
    let mut t = t0;
    let mut u = u0.to_vec();
    let mut out = Vec::with_capacity(outputs.len());
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut unew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut h = opts.h_init;
    let mut steps = 0;
    if !sys.rhs(t, &u, &mut k[0]) || !sys.admissible(&u) {
        return (out, OdeStop::Exit { t });
    }
    let mut last_reject_invalid = false;
    for &target in outputs {
        if target <= t {
            out.push((target, u.clone()));
            continue;
        }
        while t < target {
            if steps >= opts.max_steps {
                return (out, OdeStop::StepFailure { t });
            }
            steps += 1;
            let remaining = target - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let hh = if landing { remaining } else { h };
            let mut ok = true;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = u[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += hh * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                let (_, after) = k.split_at_mut(s);
                if !sys.rhs(t + C[s] * hh, &tmp, &mut after[0])
                    || after[0].iter().any(|v| !v.is_finite())
                {
                    ok = false;
                    break;
                }
            }
            if ok {
                for i in 0..n {
                    let mut s5 = 0.0;
                    let mut s4 = 0.0;
                    for s in 0..7 {
                        s5 += B5[s] * k[s][i];
                        s4 += B4[s] * k[s][i];
                    }
                    unew[i] = u[i] + hh * s5;
                    err[i] = hh * (s5 - s4);
                }
                ok = unew.iter().all(|v| v.is_finite()) && sys.admissible(&unew);
            }
            if !ok {
                last_reject_invalid = true;
                h = hh * 0.25;
                if h < opts.h_min {
                    return (out, OdeStop::Exit { t });
                }
                continue;
            }
            sys.weights(&unew, opts, &mut w);
            let mut en: f64 = 0.0;
            for i in 0..n {
                en = en.max(err[i].abs() / w[i]);
            }
            if en <= 1.0 {
                t = if landing { target } else { t + hh };
                u.copy_from_slice(&unew);
                // FSAL: stage 7 is the derivative at the new point
                let (first, rest) = k.split_at_mut(6);
                first[0].copy_from_slice(&rest[0]);
                last_reject_invalid = false;
                let fac = if en == 0.0 {
                    5.0
                } else {
                    (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !landing || hh >= h {
                    h = hh * fac;
                }
            } else {
                h = hh * (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
                if h < opts.h_min {
                    let stop = if last_reject_invalid {
                        OdeStop::Exit { t }
                    } else {
                        OdeStop::StepFailure { t }
                    };
                    return (out, stop);
                }
            }
        }
        out.push((target, u.clone()));
    }
    (out, OdeStop::Completed)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Harmonic;
    impl OdeSystem for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, u: &[f64], du: &mut [f64]) -> bool {
            du[0] = u[1];
            du[1] = -u[0];
            true
        }
    }

    #[test]
    fn oscillator_lands_on_outputs() {
        let outs: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let (res, stop) = integrate(&Harmonic, 0.0, &[0.0, 1.0], &outs, &OdeOptions::default());
        assert_eq!(stop, OdeStop::Completed);
        assert_eq!(res.len(), outs.len());
        for (t, u) in res {
            assert!((u[0] - t.sin()).abs() < 1e-8, "t={t}");
        }
    }

    struct Escape;
    impl OdeSystem for Escape {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, _u: &[f64], du: &mut [f64]) -> bool {
            du[0] = 1.0;
            true
        }
        fn admissible(&self, u: &[f64]) -> bool {
            u[0] < 1.0
        }
    }

    #[test]
    fn reports_exit() {
        let (res, stop) = integrate(&Escape, 0.0, &[0.0], &[0.5, 2.0], &OdeOptions::default());
        assert_eq!(res.len(), 1);
        match stop {
            OdeStop::Exit { t } => assert!((t - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }
}
