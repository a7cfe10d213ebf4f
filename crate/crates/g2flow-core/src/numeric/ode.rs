//! Dormand–Prince 5(4) with Hairer's dense output and sign-change events.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::roots::brent;
use super::NumericError;
use crate::math::{abs, pow, sqrt};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: None, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// An event fires where `g(t, y)` changes sign.
pub struct EventSpec<'a> {
    pub name: String,
    pub g: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    pub terminal: bool,
}

impl<'a> EventSpec<'a> {
    pub fn new(name: &str, terminal: bool, g: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        EventSpec { name: String::from(name), g: Box::new(g), terminal }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit {
    pub index: usize,
    pub name: String,
    pub t: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeStatus {
    Completed,
    Terminated { event: usize, t: f64 },
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub status: OdeStatus,
    pub events: Vec<EventHit>,
    pub accepted: usize,
    pub rejected: usize,
}

struct Dense {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Dense {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        for i in 0..out.len() {
            out[i] = self.r[0][i] + s * (self.r[1][i] + s1 * (self.r[2][i] + s * (self.r[3][i] + s1 * self.r[4][i])));
        }
    }
}

fn err_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let mut s = 0.0;
    for i in 0..err.len() {
        let sc = opts.atol + opts.rtol * abs(y0[i]).max(abs(y1[i]));
        let r = err[i] / sc;
        s += r * r;
    }
    sqrt(s / err.len() as f64)
}

/// Integrates y' = f(t, y) from `t_eval[0]` through every point of
/// `t_eval` (monotone in either direction), returning the solution there.
pub fn dopri5<F>(f: F, y0: &[f64], t_eval: &[f64], events: &[EventSpec<'_>], opts: &OdeOptions) -> Result<OdeSolution, NumericError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if t_eval.is_empty() {
        return Err(NumericError::EmptyInterval);
    }
    let n = y0.len();
    let t_start = t_eval[0];
    let t_end = *t_eval.last().unwrap_or(&t_start);
    let dir = if t_end >= t_start { 1.0 } else { -1.0 };
    for i in 1..t_eval.len() {
        if dir * (t_eval[i] - t_eval[i - 1]) <= 0.0 {
            return Err(NumericError::NonMonotoneGrid { index: i });
        }
    }

    let mut sol = OdeSolution {
        t: vec![t_start],
        y: vec![y0.to_vec()],
        status: OdeStatus::Completed,
        events: Vec::new(),
        accepted: 0,
        rejected: 0,
    };
    if t_eval.len() == 1 {
        return Ok(sol);
    }

    let mut t = t_start;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(NumericError::NonFinite { t });
    }
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];

    let span = abs(t_end - t_start);
    let mut h = match opts.h_init {
        Some(h) => abs(h),
        None => {
            let d0 = err_norm(&y, &y, &y, opts);
            let d1 = err_norm(&k1, &y, &y, opts);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            h0.min(span)
        }
    }
    .min(opts.h_max)
    .max(1e-14 * span);

    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut next_out = 1;
    let mut facold: f64 = 1e-4;

    loop {
        if sol.accepted + sol.rejected >= opts.max_steps {
            return Err(NumericError::MaxIterations);
        }
        let remaining = abs(t_end - t);
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = dir * h;

        for i in 0..n {
            ytmp[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + hs, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let t_new = if last { t_end } else { t + hs };
        f(t_new, &ynew, &mut k7);
        for i in 0..n {
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let finite = ynew.iter().chain(&k7).chain(&err).all(|v| v.is_finite());
        let e = if finite { err_norm(&err, &y, &ynew, opts) } else { f64::INFINITY };

        if e > 1.0 {
            sol.rejected += 1;
            let fac = if e.is_finite() { (0.9 * pow(e, -0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            if h < 1e-14 * span.max(abs(t)) {
                return Err(NumericError::StepSizeUnderflow { t });
            }
            continue;
        }
        sol.accepted += 1;

        let dense = {
            let mut r0 = vec![0.0; n];
            let mut r1 = vec![0.0; n];
            let mut r2 = vec![0.0; n];
            let mut r3 = vec![0.0; n];
            let mut r4 = vec![0.0; n];
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r0[i] = y[i];
                r1[i] = ydiff;
                r2[i] = bspl;
                r3[i] = ydiff - hs * k7[i] - bspl;
                r4[i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            Dense { t0: t, h: hs, r: [r0, r1, r2, r3, r4] }
        };

        // Events inside (t, t_new]; the earliest terminal one stops the run.
        let mut stop_at: Option<(usize, f64)> = None;
        let mut buf = vec![0.0; n];
        let mut hits: Vec<EventHit> = Vec::new();
        for (ei, ev) in events.iter().enumerate() {
            let g_new = (ev.g)(t_new, &ynew);
            let g_old = g_prev[ei];
            g_prev[ei] = g_new;
            let crossed = (g_old < 0.0 && g_new >= 0.0) || (g_old > 0.0 && g_new <= 0.0);
            if !crossed {
                continue;
            }
            let gt = |s: f64| {
                let mut yy = vec![0.0; n];
                dense.eval(s, &mut yy);
                (ev.g)(s, &yy)
            };
            let (lo, hi) = if dir > 0.0 { (t, t_new) } else { (t_new, t) };
            let te = if g_new == 0.0 { t_new } else { brent(gt, lo, hi, 1e-14 * (1.0 + abs(t_new)), 200)? };
            dense.eval(te, &mut buf);
            hits.push(EventHit { index: ei, name: ev.name.clone(), t: te, y: buf.clone() });
            if ev.terminal {
                match stop_at {
                    Some((_, ts)) if dir * (te - ts) >= 0.0 => {}
                    _ => stop_at = Some((ei, te)),
                }
            }
        }
        hits.sort_by(|a, b| (dir * a.t).partial_cmp(&(dir * b.t)).unwrap_or(core::cmp::Ordering::Equal));
        let horizon = stop_at.map(|(_, ts)| ts).unwrap_or(t_new);
        for hit in hits {
            if dir * (hit.t - horizon) <= 0.0 {
                sol.events.push(hit);
            }
        }

        while next_out < t_eval.len() && dir * (t_eval[next_out] - horizon) <= 0.0 {
            let to = t_eval[next_out];
            if to == t_new {
                sol.y.push(ynew.clone());
            } else {
                dense.eval(to, &mut buf);
                sol.y.push(buf.clone());
            }
            sol.t.push(to);
            next_out += 1;
        }

        if let Some((ei, ts)) = stop_at {
            sol.status = OdeStatus::Terminated { event: ei, t: ts };
            return Ok(sol);
        }

        t = t_new;
        core::mem::swap(&mut y, &mut ynew);
        core::mem::swap(&mut k1, &mut k7);
        if next_out >= t_eval.len() || last {
            return Ok(sol);
        }

        // Lund-stabilized PI step control.
        let fac11 = pow(e.max(1e-10), 0.17);
        let mut fac = fac11 / pow(facold, 0.04);
        fac = (fac / 0.9).clamp(0.1, 5.0);
        facold = e.max(1e-4);
        h = (h / fac).min(opts.h_max);
    }
}
