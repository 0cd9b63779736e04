//! Cayley transform toolkit and the Riccati ODE cross-check.
//!
//! The Cayley routines are exact rational; the ODE integrator is the one
//! place in the crate where floating point is allowed, since it exists to
//! cross-check the closed-form star exponential numerically.

use crate::error::CoreError;
use crate::matq::MatQ;
use crate::Result;

/// C(X) = (1 - X)(1 + X)^{-1}. Errors when 1 + X is singular.
pub fn cayley(x: &MatQ) -> Result<MatQ> {
    let n = x.rows;
    let id = MatQ::identity(n);
    let denom = (&id + x).inverse()?;
    Ok(&(&id - x) * &denom)
}

/// The inverse transform has the same formula: C^{-1}(g) = (1 - g)(1 + g)^{-1}.
pub fn cayley_inv(g: &MatQ) -> Result<MatQ> {
    cayley(g)
}

// ---------------------------------------------------------------------------
// float matrix helpers (cross-check only)
// ---------------------------------------------------------------------------

/// Row-major float matrix.
#[derive(Debug, Clone)]
pub struct MatF {
    pub n: usize,
    pub data: Vec<f64>,
}

impl MatF {
    pub fn zeros(n: usize) -> Self {
        MatF {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_ratmat(m: &MatQ) -> Self {
        let n = m.rows;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = crate::rational::to_f64(&m[(i, j)]);
            }
        }
        out
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mul(&self, other: &MatF) -> MatF {
        let n = self.n;
        let mut out = MatF::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &MatF) -> MatF {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &MatF) -> MatF {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, k: f64) -> MatF {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= k;
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> MatF {
        let n = self.n;
        let mut out = MatF::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    /// Gauss with partial pivoting.
    pub fn inverse(&self) -> Option<MatF> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = MatF::identity(n);
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a.at(r, col).abs() > a.at(pivot, col).abs() {
                    pivot = r;
                }
            }
            if a.at(pivot, col).abs() < 1e-300 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a.at(col, col);
            for j in 0..n {
                a.data[col * n + j] /= p;
                inv.data[col * n + j] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = a.at(r, col);
                    if f != 0.0 {
                        for j in 0..n {
                            let av = a.data[col * n + j];
                            let iv = inv.data[col * n + j];
                            a.data[r * n + j] -= f * av;
                            inv.data[r * n + j] -= f * iv;
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a.at(r, col).abs() > a.at(pivot, col).abs() {
                    pivot = r;
                }
            }
            if a.at(pivot, col).abs() < 1e-300 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a.at(col, col);
            det *= p;
            for r in col + 1..n {
                let f = a.at(r, col) / p;
                if f != 0.0 {
                    for j in col..n {
                        let v = a.data[col * n + j];
                        a.data[r * n + j] -= f * v;
                    }
                }
            }
        }
        det
    }

    /// exp(M) by scaling and squaring with a Taylor tail.
    pub fn expm(&self) -> MatF {
        let norm = self.max_abs() * self.n as f64;
        let mut s = 0u32;
        while norm / 2f64.powi(s as i32) > 0.5 {
            s += 1;
        }
        let a = self.scale(1.0 / 2f64.powi(s as i32));
        let mut term = MatF::identity(self.n);
        let mut sum = MatF::identity(self.n);
        for k in 1..=20 {
            term = term.mul(&a).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        let mut out = sum;
        for _ in 0..s {
            out = out.mul(&out);
        }
        out
    }
}

/// One sampled Riccati path.
#[derive(Debug, Clone)]
pub struct RiccatiPaths {
    /// Sample times (steps + 1 entries including t = 0).
    pub times: Vec<f64>,
    /// q(t) samples.
    pub q_path: Vec<MatF>,
    /// g(t) samples.
    pub g_path: Vec<f64>,
}

/// Fourth-order integration of dq/dt = (1+q) a (1-q), dg/dt = -tr(aq) g / 2
/// with q(0) = Lambda B, g(0) = 1, a = Lambda A.
///
/// Before integrating, the closed-form amplitude determinant
/// det((e^{at}(1+b) + e^{-at}(1-b))/2) is monitored along the path; a
/// near-zero value reports the critical time instead of integrating through
/// the blow-up.
pub fn riccati_solve(
    a_form: &MatQ,
    b_form: &MatQ,
    lambda: &MatQ,
    t_end: f64,
    steps: usize,
) -> Result<RiccatiPaths> {
    if steps == 0 {
        return Err(CoreError::Invalid("steps must be >= 1".into()));
    }
    let a = MatF::from_ratmat(&(lambda * a_form));
    let b = MatF::from_ratmat(&(lambda * b_form));
    let n = a.n;
    let id = MatF::identity(n);

    // singularity scan on the closed-form amplitude determinant; the
    // threshold is generous because a vanishing determinant is approached
    // quadratically from sampled points
    let scan = 4096usize;
    for k in 0..=scan {
        let t = t_end * k as f64 / scan as f64;
        let d = amplitude_matrix(&a, &b, t).det();
        if d.abs() < 1e-6 {
            return Err(CoreError::Singularity { t });
        }
    }

    let h = t_end / steps as f64;
    let deriv_q = |q: &MatF| -> MatF {
        let one_plus = id.add(q);
        let one_minus = id.sub(q);
        one_plus.mul(&a).mul(&one_minus)
    };
    let deriv_g = |q: &MatF, g: f64| -> f64 { -0.5 * a.mul(q).trace() * g };

    let mut q = b.clone();
    let mut g = 1.0f64;
    let mut times = vec![0.0];
    let mut q_path = vec![q.clone()];
    let mut g_path = vec![g];
    for k in 0..steps {
        let t = k as f64 * h;
        let k1q = deriv_q(&q);
        let k1g = deriv_g(&q, g);
        let q2 = q.add(&k1q.scale(h / 2.0));
        let k2q = deriv_q(&q2);
        let k2g = deriv_g(&q2, g + h / 2.0 * k1g);
        let q3 = q.add(&k2q.scale(h / 2.0));
        let k3q = deriv_q(&q3);
        let k3g = deriv_g(&q3, g + h / 2.0 * k2g);
        let q4 = q.add(&k3q.scale(h));
        let k4q = deriv_q(&q4);
        let k4g = deriv_g(&q4, g + h * k3g);
        q = q.add(
            &k1q.add(&k2q.scale(2.0))
                .add(&k3q.scale(2.0))
                .add(&k4q)
                .scale(h / 6.0),
        );
        g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        times.push(t + h);
        q_path.push(q.clone());
        g_path.push(g);
    }
    Ok(RiccatiPaths {
        times,
        q_path,
        g_path,
    })
}

/// (e^{at}(1+b) + e^{-at}(1-b)) / 2.
pub fn amplitude_matrix(a: &MatF, b: &MatF, t: f64) -> MatF {
    let n = a.n;
    let id = MatF::identity(n);
    let eat = a.scale(t).expm();
    let emat = a.scale(-t).expm();
    eat.mul(&id.add(b)).add(&emat.mul(&id.sub(b))).scale(0.5)
}

/// Closed-form q(t) = e^{-at} (e^{at}(1+b) - e^{-at}(1-b))
///                    (e^{at}(1+b) + e^{-at}(1-b))^{-1} e^{at}.
pub fn q_closed_form(a: &MatF, b: &MatF, t: f64) -> Option<MatF> {
    let n = a.n;
    let id = MatF::identity(n);
    let eat = a.scale(t).expm();
    let emat = a.scale(-t).expm();
    let num = eat.mul(&id.add(b)).sub(&emat.mul(&id.sub(b)));
    let den = eat.mul(&id.add(b)).add(&emat.mul(&id.sub(b)));
    Some(emat.mul(&num).mul(&den.inverse()?).mul(&eat))
}

/// Closed-form amplitude g(t) = det^{-1/2} of `amplitude_matrix`.
pub fn g_closed_form(a: &MatF, b: &MatF, t: f64) -> f64 {
    amplitude_matrix(a, b, t).det().powf(-0.5)
}
