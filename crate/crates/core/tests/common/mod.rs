//! Brute-force references shared by the integration tests. The references materialize full
//! products with plain loops instead of the library's product code.
#![allow(dead_code)]

use kronsample::multilinear::{sample_indices, Matrix, MultilinearModel, Selection, C64};
use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Dense = DMatrix<C64>;

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, complex: bool, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
        C64::new(re, im)
    })
    .unwrap()
}

pub fn unit_row_matrix<R: Rng>(rows: usize, cols: usize, complex: bool, rng: &mut R) -> Matrix {
    let m = random_matrix(rows, cols, complex, rng);
    let data: Vec<Vec<C64>> = m
        .to_rows()
        .into_iter()
        .map(|r| {
            let n = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            r.into_iter().map(|z| z / n).collect()
        })
        .collect();
    Matrix::from_complex_rows(&data).unwrap()
}

pub fn dense_model<R: Rng>(dims: &[usize], ranks: &[usize], complex: bool, rng: &mut R) -> MultilinearModel {
    let f = dims.iter().zip(ranks).map(|(&n, &k)| random_matrix(n, k, complex, rng)).collect();
    MultilinearModel::dense(f).unwrap()
}

pub fn diag_model<R: Rng>(dims: &[usize], kc: usize, complex: bool, rng: &mut R) -> MultilinearModel {
    let f = dims.iter().map(|&n| random_matrix(n, kc, complex, rng)).collect();
    MultilinearModel::diagonal(f).unwrap()
}

/// Random kept sets with `lo[i] ≤ |L_i| ≤ N_i`.
pub fn random_selection<R: Rng>(dims: &[usize], lo: &[usize], rng: &mut R) -> Selection {
    let kept = dims
        .iter()
        .zip(lo)
        .map(|(&n, &l)| {
            let c = rng.random_range(l..=n);
            index::sample(rng, n, c).into_vec()
        })
        .collect();
    Selection::new(dims, kept).unwrap()
}

pub fn to_dense(m: &Matrix) -> Dense {
    m.as_inner().clone()
}

pub fn naive_kron(a: &Dense, b: &Dense) -> Dense {
    let mut out = Dense::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            for k in 0..b.nrows() {
                for l in 0..b.ncols() {
                    out[(i * b.nrows() + k, j * b.ncols() + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn naive_khatri_rao(a: &Dense, b: &Dense) -> Dense {
    let mut out = Dense::zeros(a.nrows() * b.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for k in 0..b.nrows() {
            for c in 0..a.ncols() {
                out[(i * b.nrows() + k, c)] = a[(i, c)] * b[(k, c)];
            }
        }
    }
    out
}

pub fn fold(ms: &[Dense], f: fn(&Dense, &Dense) -> Dense) -> Dense {
    ms[1..].iter().fold(ms[0].clone(), |acc, m| f(&acc, m))
}

/// Full system matrix of a model: Kronecker or Khatri-Rao product of its factors.
pub fn materialize(model: &MultilinearModel) -> Dense {
    let f: Vec<Dense> = model.factors().iter().map(to_dense).collect();
    if model.is_diagonal() {
        fold(&f, naive_khatri_rao)
    } else {
        fold(&f, naive_kron)
    }
}

/// Rows of the full system matrix picked by the sample indices of `sel`.
pub fn materialize_sampled(model: &MultilinearModel, sel: &Selection) -> Dense {
    let full = materialize(model);
    let idx = sample_indices(sel);
    Dense::from_fn(idx.len(), full.ncols(), |r, c| full[(idx[r], c)])
}

/// `Σ_{a,b} |⟨ψ_a, ψ_b⟩|²` over the rows of `psi`.
pub fn pairwise_fp(psi: &Dense) -> f64 {
    let mut s = 0.0;
    for a in 0..psi.nrows() {
        for b in 0..psi.nrows() {
            let ip: C64 = (0..psi.ncols()).map(|c| psi[(a, c)] * psi[(b, c)].conj()).sum();
            s += ip.norm_sqr();
        }
    }
    s
}

/// Relative Frobenius distance between the factorized least-squares operator, assembled
/// column by column from unit sample vectors, and the SVD pseudoinverse of the
/// materialized system matrix.
pub fn pinv_error(sampled: &MultilinearModel) -> f64 {
    let est = kronsample::recon::LsEstimator::new(sampled).unwrap();
    let psi = materialize(sampled);
    let n = psi.nrows();
    let mut op = Dense::zeros(psi.ncols(), n);
    for j in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[j] = C64::new(1.0, 0.0);
        op.set_column(j, &nalgebra::DVector::from_vec(est.estimate(&e).unwrap().0));
    }
    rel_err(&op, &psi.pseudo_inverse(1e-13).unwrap())
}

pub fn trace_inverse_gram(psi: &Dense) -> f64 {
    let gram = psi.adjoint() * psi;
    gram.try_inverse().expect("invertible").trace().re
}

pub fn rel_err(a: &Dense, b: &Dense) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rel_err_vec(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn rel_err_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn random_vec<R: Rng>(n: usize, complex: bool, rng: &mut R) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
            C64::new(re, im)
        })
        .collect()
}

/// Relative errors of the core algebraic identities on one random instance of order `r`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityErrors {
    pub kron_mixed_product: f64,
    pub khatri_rao_gram: f64,
    pub fp_factorization: f64,
    pub hadamard_fp: f64,
    pub pinv: f64,
}

impl IdentityErrors {
    pub fn max(&self) -> f64 {
        [
            self.kron_mixed_product,
            self.khatri_rao_gram,
            self.fp_factorization,
            self.hadamard_fp,
            self.pinv,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn merge(&mut self, o: &IdentityErrors) {
        self.kron_mixed_product = self.kron_mixed_product.max(o.kron_mixed_product);
        self.khatri_rao_gram = self.khatri_rao_gram.max(o.khatri_rao_gram);
        self.fp_factorization = self.fp_factorization.max(o.fp_factorization);
        self.hadamard_fp = self.hadamard_fp.max(o.hadamard_fp);
        self.pinv = self.pinv.max(o.pinv);
    }
}

pub fn identity_errors<R: Rng>(r: usize, complex: bool, rng: &mut R) -> IdentityErrors {
    use kronsample::dense::fp_factorized;
    use kronsample::diag::objective_p;
    use kronsample::multilinear::{grammian, hadamard_all, khatri_rao_all, kron_all, subselect};

    // (⊗A_i)(⊗B_i) = ⊗(A_i B_i)
    let a: Vec<Matrix> = (0..r)
        .map(|_| random_matrix(rng.random_range(1..=4), rng.random_range(1..=4), complex, rng))
        .collect();
    let b: Vec<Matrix> = a
        .iter()
        .map(|m| random_matrix(m.cols(), rng.random_range(1..=4), complex, rng))
        .collect();
    let lhs = kron_all(&a).unwrap().matmul(&kron_all(&b).unwrap()).unwrap();
    let ab: Vec<Dense> = a.iter().zip(&b).map(|(x, y)| to_dense(x) * to_dense(y)).collect();
    let kron_mixed_product = rel_err(&to_dense(&lhs), &fold(&ab, naive_kron));

    // (⊙U_i)^H (⊙U_i) = ∘ U_i^H U_i
    let kc = rng.random_range(1..=4);
    let u: Vec<Matrix> = (0..r)
        .map(|_| random_matrix(rng.random_range(1..=8), kc, complex, rng))
        .collect();
    let kr = fold(&u.iter().map(to_dense).collect::<Vec<_>>(), naive_khatri_rao);
    let grams: Vec<Matrix> = u.iter().map(grammian).collect();
    let lib_kr = khatri_rao_all(&u).unwrap();
    let khatri_rao_gram = rel_err(&to_dense(&hadamard_all(&grams).unwrap()), &(kr.adjoint() * &kr))
        .max(rel_err(&to_dense(&lib_kr), &kr));

    // FP of the sampled Kronecker factor is the product of per-domain FPs
    let ranks: Vec<usize> = (0..r).map(|_| rng.random_range(1..=3)).collect();
    let dims: Vec<usize> = ranks.iter().map(|&k| rng.random_range(k + 1..=8)).collect();
    let dense = dense_model(&dims, &ranks, complex, rng);
    let sel = random_selection(&dims, &vec![1; r], rng);
    let fp_factorization = rel_err_scalar(
        fp_factorized(&dense, &sel).unwrap(),
        pairwise_fp(&materialize_sampled(&dense, &sel)),
    );

    // FP of the sampled Khatri-Rao factor is ‖∘T_i‖²
    let ddims: Vec<usize> = (0..r).map(|_| rng.random_range(1..=8)).collect();
    let diag = diag_model(&ddims, kc, complex, rng);
    let dsel = random_selection(&ddims, &vec![1; r], rng);
    let hadamard_fp = rel_err_scalar(
        objective_p(&diag, &dsel).unwrap(),
        pairwise_fp(&materialize_sampled(&diag, &dsel)),
    );

    // factorized least squares equals the materialized pseudoinverse
    let psel = random_selection(&dims, &ranks, rng);
    let sampled = subselect(&dense, &psel).unwrap();
    let mut pinv = pinv_error(&sampled);
    // diagonal core with enough samples per domain for full column rank
    let kd = rng.random_range(1..=3);
    let pdims: Vec<usize> = (0..r).map(|_| rng.random_range(kd.max(2)..=6)).collect();
    let dm = diag_model(&pdims, kd, complex, rng);
    let mut lo = vec![1; r];
    lo[0] = kd;
    let dsel = random_selection(&pdims, &lo, rng);
    let sampled = subselect(&dm, &dsel).unwrap();
    pinv = pinv.max(pinv_error(&sampled));

    IdentityErrors {
        kron_mixed_product,
        khatri_rao_gram,
        fp_factorization,
        hadamard_fp,
        pinv,
    }
}

/// Outcome of an exhaustive submodularity check over all subsets of a small ground set.
#[derive(Clone, Copy, Debug, Default)]
pub struct SubmodularityReport {
    pub checks: usize,
    /// `|f(∅)|`
    pub normalization: f64,
    pub monotone_violations: usize,
    pub diminishing_violations: usize,
    /// Largest amount by which any inequality failed.
    pub worst: f64,
}

impl SubmodularityReport {
    pub fn clean(&self, slack: f64) -> bool {
        self.normalization <= slack && self.monotone_violations == 0 && self.diminishing_violations == 0
    }

    pub fn merge(&mut self, o: &SubmodularityReport) {
        self.checks += o.checks;
        self.normalization = self.normalization.max(o.normalization);
        self.monotone_violations += o.monotone_violations;
        self.diminishing_violations += o.diminishing_violations;
        self.worst = self.worst.max(o.worst);
    }
}

/// Evaluates `f` on every subset of removed rows and checks `f(∅) = 0`,
/// `f(S ∪ x) ≥ f(S)` and `f(S ∪ x) − f(S) ≥ f(S ∪ {x, y}) − f(S ∪ y)`.
pub fn check_submodular(
    dims: &[usize],
    slack: f64,
    f: impl Fn(&kronsample::multilinear::Complement) -> f64,
) -> SubmodularityReport {
    use kronsample::multilinear::Complement;
    let ground: Vec<(usize, usize)> = dims
        .iter()
        .enumerate()
        .flat_map(|(d, &n)| (0..n).map(move |x| (d, x)))
        .collect();
    let n = ground.len();
    assert!(n <= 16, "ground set too large for exhaustive checks");
    let values: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            let mut removed = vec![Vec::new(); dims.len()];
            for (b, &(d, x)) in ground.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    removed[d].push(x);
                }
            }
            f(&Complement::new(dims, removed).unwrap())
        })
        .collect();
    let mut rep = SubmodularityReport {
        normalization: values[0].abs(),
        ..Default::default()
    };
    for s in 0..1usize << n {
        for x in (0..n).filter(|&x| s >> x & 1 == 0) {
            let sx = s | 1 << x;
            rep.checks += 1;
            let drop = values[s] - values[sx];
            if drop > slack {
                rep.monotone_violations += 1;
                rep.worst = rep.worst.max(drop);
            }
            for y in (x + 1..n).filter(|&y| s >> y & 1 == 0) {
                let sy = s | 1 << y;
                rep.checks += 1;
                let gap = (values[sx | 1 << y] - values[sy]) - (values[sx] - values[s]);
                if gap > slack {
                    rep.diminishing_violations += 1;
                    rep.worst = rep.worst.max(gap);
                }
            }
        }
    }
    rep
}

/// Random small instance for the submodularity suites: `R = 2`, `N_i ≤ 5`.
pub fn submodularity_instance<R: Rng>(diagonal: bool, rng: &mut R) -> MultilinearModel {
    if diagonal {
        let dims = [rng.random_range(2..=5), rng.random_range(2..=5)];
        let kc = rng.random_range(1..=3);
        let f = dims.iter().map(|&n| unit_row_matrix(n, kc, rng.random(), rng)).collect();
        MultilinearModel::diagonal(f).unwrap()
    } else {
        let dims = [rng.random_range(2..=5), rng.random_range(2..=5)];
        let f = dims
            .iter()
            .map(|&n| {
                let k = rng.random_range(1..n);
                unit_row_matrix(n, k, rng.random(), rng)
            })
            .collect();
        MultilinearModel::dense(f).unwrap()
    }
}

/// Empirical `E‖ĝ − g‖²` under unit-variance circular noise against the analytic `tr(T⁻¹)`.
pub fn monte_carlo_mse<R: Rng>(sampled: &MultilinearModel, trials: usize, rng: &mut R) -> (f64, f64) {
    use kronsample::bench::random::complex_gaussian;
    use kronsample::multilinear::{multilinear_apply, CoreVector};
    use kronsample::recon::LsEstimator;
    let est = LsEstimator::new(sampled).unwrap();
    let mut err = 0.0;
    for _ in 0..trials {
        let g = CoreVector(random_vec(sampled.core_len(), true, rng));
        let mut y = multilinear_apply(sampled, &g).unwrap();
        for v in &mut y {
            *v += complex_gaussian(1.0, rng);
        }
        let g_hat = est.estimate(&y).unwrap();
        err += g_hat.as_slice().iter().zip(g.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
    }
    (err / trials as f64, kronsample::metrics(sampled).unwrap().mse)
}

/// Relative error of `x̂` after a noiseless sample-estimate-reconstruct round trip.
pub fn round_trip_error<R: Rng>(model: &MultilinearModel, sel: &Selection, rng: &mut R) -> f64 {
    use kronsample::multilinear::{multilinear_apply, sample_tensor, CoreVector};
    let g = CoreVector(random_vec(model.core_len(), true, rng));
    let x = multilinear_apply(model, &g).unwrap();
    let y = sample_tensor(&x, sel).unwrap();
    let sampled = kronsample::multilinear::subselect(model, sel).unwrap();
    let g_hat = kronsample::ls_estimate(&sampled, &y).unwrap();
    let x_hat = kronsample::reconstruct_x(model, &g_hat).unwrap();
    rel_err_vec(&x_hat, &x)
}
