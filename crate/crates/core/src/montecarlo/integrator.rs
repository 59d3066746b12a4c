//! Exact discretization of the linearized Langevin equations.
//!
//! The state is `(Re d, Im d, Re c, Im c, Re J, Im J)` where `J` is the
//! integral of the output field over the current step. Over one step the
//! linear SDE `dY = A Y dt + B dW` is propagated exactly: the mean by
//! `exp(A dt)` and the noise by the covariance `∫ exp(As) B Bᵀ exp(Aᵀs) ds`,
//! both from a single Van Loan matrix exponential.

use nalgebra::{DMatrix, DVector, SMatrix, SVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::ValidatedParams;

type M6 = SMatrix<f64, 6, 6>;
type M4 = SMatrix<f64, 4, 4>;
type M6x8 = SMatrix<f64, 6, 8>;

/// Seeded samples from one segment of the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub dt: f64,
    pub steps: usize,
    /// Cavity output field averaged over each step.
    pub d_out: Vec<Complex64>,
    /// Position `x = c + c*` at the end of each step, when recorded.
    pub x: Option<Vec<f64>>,
    /// Intracavity fluctuation at the end of each step, when recorded.
    pub d: Option<Vec<Complex64>>,
    /// Time average of `x^2` over the segment.
    pub x2_mean: f64,
    pub tag: String,
}

/// Drift and noise matrices of the linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub drift: M6,
    pub noise: M6x8,
}

/// Square root of a symmetric positive semidefinite 2x2 covariance.
fn sqrt_psd2(cxx: f64, cxy: f64, cyy: f64) -> [[f64; 2]; 2] {
    if cxx > 0.0 {
        let a = cxx.sqrt();
        let b = cxy / a;
        [[a, 0.0], [b, (cyy - b * b).max(0.0).sqrt()]]
    } else {
        [[0.0, 0.0], [0.0, cyy.max(0.0).sqrt()]]
    }
}

impl LinearSystem {
    pub fn new(p: &ValidatedParams) -> Self {
        let (k, ke, ki) = (p.kappa, p.kappa_ext, p.kappa_int());
        let (g, w, gm, delta) = (p.coupling, p.omega_m, p.gamma_m, p.detuning);

        let mut a = M6::zeros();
        a[(0, 0)] = -k / 2.0;
        a[(0, 1)] = -delta;
        a[(1, 0)] = delta;
        a[(1, 1)] = -k / 2.0;
        a[(1, 2)] = -2.0 * g;
        a[(2, 2)] = -gm / 2.0;
        a[(2, 3)] = w;
        a[(3, 0)] = -2.0 * g;
        a[(3, 2)] = -w;
        a[(3, 3)] = -gm / 2.0;
        a[(4, 0)] = ke.sqrt();
        a[(5, 1)] = ke.sqrt();

        let alpha = p.field.alpha();
        let sf = (alpha / 4.0).sqrt();
        let sm = ((p.n_th + p.beta / 2.0) / 2.0).sqrt();
        let mut b = M6x8::zeros();
        // ξ_ext
        b[(0, 0)] = ke.sqrt() * sf;
        b[(1, 1)] = ke.sqrt() * sf;
        b[(4, 0)] = -sf;
        b[(5, 1)] = -sf;
        // ξ_int
        b[(0, 2)] = ki.sqrt() * sf;
        b[(1, 3)] = ki.sqrt() * sf;
        // η
        b[(2, 4)] = gm.sqrt() * sm;
        b[(3, 5)] = gm.sqrt() * sm;
        // ζ = (δx + i δy)/2
        if let Some(l) = p.field.laser {
            let s = sqrt_psd2(l.cxx, l.cxy, l.cyy);
            let into_d = l.r * k.sqrt() / 2.0;
            let into_out = -p.topology.lambda() * l.r * (k / ke).sqrt() / 2.0;
            for (row, coef) in [(0usize, into_d), (4, into_out)] {
                for col in 0..2 {
                    b[(row, 6 + col)] = coef * s[0][col];
                    b[(row + 1, 6 + col)] = coef * s[1][col];
                }
            }
        }
        LinearSystem { drift: a, noise: b }
    }

    fn core_drift(&self) -> M4 {
        self.drift.fixed_view::<4, 4>(0, 0).into_owned()
    }

    fn core_diffusion(&self) -> M4 {
        let b4 = self.noise.fixed_view::<4, 8>(0, 0);
        b4 * b4.transpose()
    }

    /// Fails unless every eigenvalue of the `(d, c)` drift has negative real part.
    pub fn check_stable(&self) -> Result<()> {
        let worst = self
            .core_drift()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst < 0.0 {
            Ok(())
        } else {
            Err(Error::UnstableDrift(format!("largest eigenvalue real part {worst}")))
        }
    }

    /// Stationary covariance of `(d, c)` from `A P + P Aᵀ + B Bᵀ = 0`.
    pub fn stationary_covariance(&self) -> Result<M4> {
        let a = self.core_drift();
        let q = self.core_diffusion();
        let n = 4;
        let mut k = DMatrix::<f64>::zeros(n * n, n * n);
        // Column-major vec: vec(AP) = (I ⊗ A) vec P, vec(P Aᵀ) = (A ⊗ I) vec P.
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    k[(j * n + i, j * n + l)] += a[(i, l)];
                    k[(j * n + i, l * n + i)] += a[(j, l)];
                }
            }
        }
        let rhs = DVector::from_iterator(n * n, q.iter().map(|v| -v));
        let sol = k
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::UnstableDrift("singular Lyapunov operator".into()))?;
        let p = M4::from_column_slice(sol.as_slice());
        Ok((p + p.transpose()) / 2.0)
    }

    /// Mean propagator and noise covariance over one step.
    pub fn discretize(&self, dt: f64) -> (M6, M6) {
        let mut vl = SMatrix::<f64, 12, 12>::zeros();
        let bbt = self.noise * self.noise.transpose();
        vl.fixed_view_mut::<6, 6>(0, 0).copy_from(&(-self.drift * dt));
        vl.fixed_view_mut::<6, 6>(0, 6).copy_from(&(bbt * dt));
        vl.fixed_view_mut::<6, 6>(6, 6).copy_from(&(self.drift.transpose() * dt));
        let e = vl.exp();
        let phi = e.fixed_view::<6, 6>(6, 6).transpose();
        let q = phi * e.fixed_view::<6, 6>(0, 6);
        (phi, (q + q.transpose()) / 2.0)
    }
}

/// Matrix square root `L` with `L Lᵀ = C` for a symmetric PSD matrix.
fn psd_sqrt<const N: usize>(c: SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    if let Some(ch) = c.cholesky() {
        return ch.l();
    }
    let eig = SymmetricEigen::new(DMatrix::from_column_slice(N, N, c.as_slice()));
    let mut l = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    SMatrix::from_column_slice(l.as_slice())
}

/// Discretized system ready for repeated segment integration.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub dt: f64,
    pub steps: usize,
    phi: SMatrix<f64, 6, 4>,
    noise: M6,
    init: M4,
}

impl Propagator {
    pub fn new(params: &ValidatedParams, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonPositiveRate { name: "dt", value: dt });
        }
        let sys = LinearSystem::new(params);
        sys.check_stable()?;
        let init = psd_sqrt(sys.stationary_covariance()?);
        let (phi, q) = sys.discretize(dt);
        Ok(Propagator {
            dt,
            steps,
            phi: phi.fixed_view::<6, 4>(0, 0).into_owned(),
            noise: psd_sqrt(q),
            init,
        })
    }

    fn normals<const N: usize, R: Rng + ?Sized>(rng: &mut R) -> SVector<f64, N> {
        SVector::<f64, N>::from_fn(|_, _| rng.sample(StandardNormal))
    }

    /// One segment started from the stationary distribution.
    pub fn integrate<R: Rng + ?Sized>(&self, rng: &mut R, record: bool, tag: &str) -> TimeTrace {
        let mut s: SVector<f64, 4> = self.init * Self::normals::<4, R>(rng);
        let mut d_out = Vec::with_capacity(self.steps);
        let mut xs = record.then(|| Vec::with_capacity(self.steps));
        let mut ds = record.then(|| Vec::with_capacity(self.steps));
        let mut x2 = 0.0;
        let inv_dt = 1.0 / self.dt;
        for _ in 0..self.steps {
            let y = self.phi * s + self.noise * Self::normals::<6, R>(rng);
            s = y.fixed_rows::<4>(0).into_owned();
            d_out.push(Complex64::new(y[4] * inv_dt, y[5] * inv_dt));
            let x = 2.0 * s[2];
            x2 += x * x;
            if let Some(v) = xs.as_mut() {
                v.push(x);
            }
            if let Some(v) = ds.as_mut() {
                v.push(Complex64::new(s[0], s[1]));
            }
        }
        TimeTrace {
            dt: self.dt,
            steps: self.steps,
            d_out,
            x: xs,
            d: ds,
            x2_mean: x2 / self.steps.max(1) as f64,
            tag: tag.to_string(),
        }
    }

    /// Stationary `<x^2>` of the linear model.
    pub fn stationary_x2(&self) -> f64 {
        let p = self.init * self.init.transpose();
        4.0 * p[(2, 2)]
    }
}
