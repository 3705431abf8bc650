//! Interference-alignment precoder/equalizer design and post-processing SINR
//! for both transmission schemes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{random_orthonormal, CMatrix, InterLink, LinkChannel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IaOptions {
    /// Target total leakage.
    pub tol: f64,
    pub max_iter: usize,
    /// Record the leakage after every iteration.
    pub track_history: bool,
    /// Once the alternating-minimization leakage drops below this level,
    /// switch to Gauss-Newton steps on the alignment equations.
    pub polish_below: Option<f64>,
}

impl Default for IaOptions {
    fn default() -> Self {
        IaOptions { tol: 1e-10, max_iter: 5000, track_history: false, polish_below: None }
    }
}

impl IaOptions {
    /// Alternating minimization to the basin, then Newton polishing.
    pub fn polished() -> Self {
        IaOptions { polish_below: Some(1e-1), ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct IaSolution {
    /// `N x Ns` precoder per transmitter.
    pub precoders: Vec<CMatrix>,
    /// `Ns x N` equalizer per receiver.
    pub equalizers: Vec<CMatrix>,
    /// Total leakage on the estimated channels.
    pub leakage: f64,
    pub iterations: usize,
    /// Gauss-Newton steps taken after alternating minimization.
    pub newton_steps: usize,
    pub history: Vec<f64>,
}

/// Eigenvectors of the `count` smallest eigenvalues of a Hermitian matrix,
/// as columns, together with the sum of those eigenvalues.
fn smallest_eigvecs(q: CMatrix, count: usize) -> (CMatrix, f64) {
    let eig = q.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let cols: Vec<_> = idx[..count].iter().map(|&i| eig.eigenvectors.column(i).clone_owned()).collect();
    let sum = idx[..count].iter().map(|&i| eig.eigenvalues[i].max(0.0)).sum();
    (CMatrix::from_columns(&cols), sum)
}

/// Total leakage `sum_x sum_{z != x} |W_x H_xz F_z|_F^2`.
pub fn total_leakage(h: &[Vec<CMatrix>], equalizers: &[CMatrix], precoders: &[CMatrix]) -> f64 {
    let k = h.len();
    let mut acc = 0.0;
    for x in 0..k {
        for z in 0..k {
            if z != x {
                acc += (&equalizers[x] * &h[x][z] * &precoders[z]).norm_squared();
            }
        }
    }
    acc
}

/// Equalizer of receiver `x`: conjugated left singular vectors of the
/// interference stack `J_x = [H_xz F_z]_{z != x}` with the `ns` smallest
/// singular values.
pub fn zero_forcing_equalizer(h: &[Vec<CMatrix>], precoders: &[CMatrix], x: usize, ns: usize) -> CMatrix {
    let n = h[x][x].nrows();
    // Left singular vectors of J_x are the eigenvectors of J_x J_x^*.
    let mut gram = CMatrix::zeros(n, n);
    for (z, f) in precoders.iter().enumerate() {
        if z != x {
            let b = &h[x][z] * f;
            gram += &b * b.adjoint();
        }
    }
    smallest_eigvecs(gram, ns).0.adjoint()
}

/// Leakage-minimizing alternating minimization over the estimated
/// intra-cluster channels `h[x][z]` (receiver `x`, transmitter `z`).
pub fn design_ia<R: Rng + ?Sized>(h: &[Vec<CMatrix>], ns: usize, opts: &IaOptions, rng: &mut R) -> Result<IaSolution> {
    let k = h.len();
    let n = h[0][0].nrows();
    let mut precoders: Vec<CMatrix> = (0..k).map(|_| random_orthonormal(rng, n, ns)).collect();
    let mut receive: Vec<CMatrix> = vec![CMatrix::zeros(n, ns); k];
    let mut history = Vec::new();
    let mut leakage;
    let mut iterations = 0;
    let mut newton_steps = 0;
    let mut polish_level = opts.polish_below;

    while iterations < opts.max_iter {
        iterations += 1;
        for x in 0..k {
            receive[x] = zero_forcing_equalizer(h, &precoders, x, ns).adjoint();
        }
        leakage = 0.0;
        for z in 0..k {
            let mut q = CMatrix::zeros(n, n);
            for x in 0..k {
                if x != z {
                    let b = h[x][z].adjoint() * &receive[x];
                    q += &b * b.adjoint();
                }
            }
            let (f, l) = smallest_eigvecs(q, ns);
            precoders[z] = f;
            leakage += l;
        }
        if opts.track_history {
            history.push(leakage);
        }
        if leakage <= opts.tol {
            break;
        }
        if matches!(polish_level, Some(level) if leakage <= level) {
            for x in 0..k {
                receive[x] = zero_forcing_equalizer(h, &precoders, x, ns).adjoint();
            }
            let (steps, l) = newton_polish(h, &mut precoders, &mut receive, opts.tol);
            newton_steps += steps;
            leakage = l;
            if leakage <= opts.tol {
                break;
            }
            polish_level = Some(0.1 * leakage);
        }
    }

    let equalizers: Vec<CMatrix> = (0..k).map(|x| zero_forcing_equalizer(h, &precoders, x, ns)).collect();
    let final_leakage = total_leakage(h, &equalizers, &precoders);
    if final_leakage > opts.tol {
        return Err(Error::NoConvergence { leakage: final_leakage, iterations });
    }
    Ok(IaSolution { precoders, equalizers, leakage: final_leakage, iterations, newton_steps, history })
}

fn orthonormalize(m: &mut CMatrix) {
    for j in 0..m.ncols() {
        for i in 0..j {
            let proj = m.column(i).dotc(&m.column(j));
            let ci = m.column(i).clone_owned();
            m.column_mut(j).axpy(-proj, &ci, Complex64::new(1.0, 0.0));
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
}

fn receive_leakage(h: &[Vec<CMatrix>], receive: &[CMatrix], precoders: &[CMatrix]) -> f64 {
    let k = h.len();
    let mut acc = 0.0;
    for x in 0..k {
        for z in 0..k {
            if z != x {
                acc += (receive[x].adjoint() * &h[x][z] * &precoders[z]).norm_squared();
            }
        }
    }
    acc
}

/// Gauss-Newton on `U_x^* H_xz F_z = 0` with the subspaces parametrized by
/// their orthogonal complements. Steps are kept only while the leakage
/// drops. Returns the number of accepted steps and the final leakage.
fn newton_polish(h: &[Vec<CMatrix>], precoders: &mut [CMatrix], receive: &mut [CMatrix], tol: f64) -> (usize, f64) {
    let k = h.len();
    let n = h[0][0].nrows();
    let ns = precoders[0].ncols();
    let m = n - ns;
    let mut leakage = receive_leakage(h, receive, precoders);
    if m == 0 {
        return (0, leakage);
    }
    let unknowns_per = m * ns;
    let cols = 2 * k * unknowns_per;
    let rows = k * (k - 1) * ns * ns;
    let mut steps = 0;
    for _ in 0..30 {
        if leakage <= tol * 1e-6 {
            break;
        }
        let f_perp: Vec<CMatrix> = precoders.iter().map(|f| smallest_eigvecs(f * f.adjoint(), m).0).collect();
        let u_perp: Vec<CMatrix> = receive.iter().map(|u| smallest_eigvecs(u * u.adjoint(), m).0).collect();
        let mut a = CMatrix::zeros(rows, cols);
        let mut b = CMatrix::zeros(rows, 1);
        let mut row = 0;
        for x in 0..k {
            for z in 0..k {
                if z == x {
                    continue;
                }
                let r = receive[x].adjoint() * &h[x][z] * &precoders[z];
                let bm = u_perp[x].adjoint() * &h[x][z] * &precoders[z];
                let cm = receive[x].adjoint() * &h[x][z] * &f_perp[z];
                for j in 0..ns {
                    for i in 0..ns {
                        b[(row, 0)] = -r[(i, j)];
                        // X_z block: sum_q C[i, q] X_z[q, j]
                        for q in 0..m {
                            a[(row, z * unknowns_per + j * m + q)] += cm[(i, q)];
                        }
                        // Z_x block: sum_q Z_x[i, q] B[q, j]
                        for q in 0..m {
                            a[(row, (k + x) * unknowns_per + q * ns + i)] += bm[(q, j)];
                        }
                        row += 1;
                    }
                }
            }
        }
        // Minimum-norm solution through the normal equations.
        let a_h = a.adjoint();
        let Some(y) = (&a * &a_h).lu().solve(&b) else { break };
        let step = a_h * y;
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..4 {
            let scale = Complex64::from(t);
            let mut new_f = precoders.to_vec();
            let mut new_u = receive.to_vec();
            for z in 0..k {
                let xz = CMatrix::from_fn(m, ns, |q, j| step[(z * unknowns_per + j * m + q, 0)] * scale);
                new_f[z] += &f_perp[z] * xz;
                orthonormalize(&mut new_f[z]);
            }
            for x in 0..k {
                let zx = CMatrix::from_fn(ns, m, |i, q| step[((k + x) * unknowns_per + q * ns + i, 0)] * scale);
                new_u[x] += &u_perp[x] * zx.adjoint();
                orthonormalize(&mut new_u[x]);
            }
            let l = receive_leakage(h, &new_u, &new_f);
            if l < leakage {
                accepted = Some((new_f, new_u, l));
                break;
            }
            t *= 0.5;
        }
        let Some((new_f, new_u, l)) = accepted else { break };
        precoders.clone_from_slice(&new_f);
        receive.clone_from_slice(&new_u);
        leakage = l;
        steps += 1;
    }
    (steps, leakage)
}

/// `|w^T H F|^2` for a receive row `w` (length N), an `N x N` channel and an
/// `N x Ns` precoder, all column-major slices.
#[inline]
pub fn stream_gain(w: &[Complex64], h: &[Complex64], f: &[Complex64], n: usize, ns: usize) -> f64 {
    let mut v = [Complex64::new(0.0, 0.0); 16];
    for j in 0..n {
        let col = &h[j * n..(j + 1) * n];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += w[i] * col[i];
        }
        v[j] = acc;
    }
    let mut total = 0.0;
    for k in 0..ns {
        let col = &f[k * n..(k + 1) * n];
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += v[j] * col[j];
        }
        total += acc.norm_sqr();
    }
    total
}

/// Terms of the post-processing SINR of one stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms {
    pub signal: f64,
    pub noise: f64,
    /// Direct-link estimation error.
    pub i_s: f64,
    /// Intra-cluster interference (error leakage plus any residual misalignment).
    pub i_e: f64,
    /// Inter-cluster interference.
    pub i_i: f64,
}

impl SinrTerms {
    pub fn sinr(&self) -> f64 {
        self.signal / (self.noise + self.i_s + self.i_e + self.i_i)
    }
}

/// IA SINR of stream `stream` at receiver `x` of the representative cluster.
/// `inter` are the links into receiver `x` from other clusters.
pub fn ia_sinr_terms(
    intra: &[Vec<LinkChannel>],
    inter: &[InterLink],
    sol: &IaSolution,
    x: usize,
    stream: usize,
    gamma_o: f64,
) -> SinrTerms {
    let ns = sol.precoders[0].ncols();
    let n = sol.precoders[0].nrows();
    let w: Vec<Complex64> = sol.equalizers[x].row(stream).iter().copied().collect();
    let direct = &intra[x][x];
    let f_x = sol.precoders[x].as_slice();
    let signal = direct.g * (1.0 - direct.beta2) * stream_gain(&w, direct.h_w.as_slice(), f_x, n, ns);
    let i_s = direct.g * direct.beta2 * stream_gain(&w, direct.e.as_slice(), f_x, n, ns);
    let mut i_e = 0.0;
    for (z, link) in intra[x].iter().enumerate() {
        if z != x {
            let h = link.true_channel();
            i_e += link.g * stream_gain(&w, h.as_slice(), sol.precoders[z].as_slice(), n, ns);
        }
    }
    let i_i = inter.iter().map(|l| l.g * stream_gain(&w, l.h.as_slice(), l.f.as_slice(), n, ns)).sum();
    SinrTerms { signal, noise: ns as f64 / gamma_o, i_s, i_e, i_i }
}

pub fn ia_sinr(
    intra: &[Vec<LinkChannel>],
    inter: &[InterLink],
    sol: &IaSolution,
    x: usize,
    stream: usize,
    gamma_o: f64,
) -> f64 {
    ia_sinr_terms(intra, inter, sol, x, stream, gamma_o).sinr()
}

/// Largest condition number accepted for the estimated direct SM channel.
pub const SM_CONDITION_GUARD: f64 = 1e12;

/// Zero-forcing rows `(H_w)^-1` of the direct SM channel.
pub fn zf_rows(direct: &LinkChannel) -> Result<CMatrix> {
    let sv = direct.h_w.singular_values();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &s in sv.iter() {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let cond = hi / lo;
    if !(cond <= SM_CONDITION_GUARD) {
        return Err(Error::IllConditioned(cond));
    }
    direct.h_w.clone().try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))
}

/// Accumulates `a (g M M^*) a^*` for the row `a`.
#[inline]
pub fn row_quadratic(a: &[Complex64], m: &[Complex64], n: usize) -> f64 {
    // a M M^* a^* = |a M|^2
    let mut total = 0.0;
    for j in 0..n {
        let col = &m[j * n..(j + 1) * n];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += a[i] * col[i];
        }
        total += acc.norm_sqr();
    }
    total
}

/// SM SINR of stream `stream` with a ZF receiver built from the estimated
/// direct channel.
pub fn sm_sinr(direct: &LinkChannel, inter: &[InterLink], stream: usize, gamma_o: f64) -> Result<f64> {
    let n = direct.h_w.nrows();
    let zf = zf_rows(direct)?;
    let a: Vec<Complex64> = zf.row(stream).iter().copied().collect();
    let norm2: f64 = a.iter().map(|c| c.norm_sqr()).sum();
    let mut denom = n as f64 / gamma_o * norm2;
    denom += direct.g * direct.beta2 * row_quadratic(&a, direct.e.as_slice(), n);
    for l in inter {
        denom += l.g * row_quadratic(&a, l.h.as_slice(), n);
    }
    Ok(direct.g * (1.0 - direct.beta2) / denom)
}

/// Estimated intra-cluster channels `H_w[x][z]`.
pub fn estimated(intra: &[Vec<LinkChannel>]) -> Vec<Vec<CMatrix>> {
    intra.iter().map(|row| row.iter().map(|l| l.h_w.clone()).collect()).collect()
}

/// `W W^*` deviation from identity in max norm.
pub fn row_orthonormality_error(w: &CMatrix) -> f64 {
    let g = w * w.adjoint();
    let id = DMatrix::<Complex64>::identity(g.nrows(), g.ncols());
    (g - id).iter().fold(0.0f64, |m, c| m.max(c.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cluster(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Vec<Vec<CMatrix>> {
        (0..k).map(|_| (0..k).map(|_| gaussian_matrix(rng, n, n)).collect()).collect()
    }

    #[test]
    fn aligns_three_user_two_antennas() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = random_cluster(&mut rng, 3, 2);
        let opts = IaOptions { track_history: true, ..Default::default() };
        let sol = design_ia(&h, 1, &opts, &mut rng).unwrap();
        assert!(sol.leakage <= 1e-8, "leakage {}", sol.leakage);
        for w in sol.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
        }
        for w in &sol.equalizers {
            assert!(row_orthonormality_error(w) < 1e-12);
        }
        for f in &sol.precoders {
            let g = f.adjoint() * f;
            assert!((g[(0, 0)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn polishing_reaches_alignment_quickly() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for &(k, n, ns) in &[(3, 2, 1), (3, 4, 2)] {
            for _ in 0..20 {
                let h = random_cluster(&mut rng, k, n);
                let sol = design_ia(&h, ns, &IaOptions::polished(), &mut rng).unwrap();
                assert!(sol.leakage <= 1e-10);
                assert!(sol.iterations < 5000);
                for w in &sol.equalizers {
                    assert!(row_orthonormality_error(w) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_users_align_in_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_cluster(&mut rng, 2, 2);
        let sol = design_ia(&h, 1, &IaOptions::default(), &mut rng).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.leakage < 1e-25);
    }

    #[test]
    fn stream_gain_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = random_orthonormal(&mut rng, 4, 2).adjoint();
        let h = gaussian_matrix(&mut rng, 4, 4);
        let f = random_orthonormal(&mut rng, 4, 2);
        let full = &w * &h * &f;
        for s in 0..2 {
            let row: Vec<Complex64> = w.row(s).iter().copied().collect();
            let direct: f64 = full.row(s).iter().map(|c| c.norm_sqr()).sum();
            assert!((stream_gain(&row, h.as_slice(), f.as_slice(), 4, 2) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn sm_noise_only_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let direct = LinkChannel::draw(&mut rng, 2, 0.0, 0.3);
        let inv = direct.h_w.clone().try_inverse().unwrap();
        let aa = &inv * inv.adjoint();
        let gamma = 50.0;
        for n in 0..2 {
            let expected = gamma * 0.3 / (2.0 * aa[(n, n)].re);
            let got = sm_sinr(&direct, &[], n, gamma).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected);
        }
    }

    #[test]
    fn ill_conditioned_direct_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut direct = LinkChannel::draw(&mut rng, 2, 0.0, 1.0);
        let c0 = direct.h_w.column(0).clone_owned();
        direct.h_w.set_column(1, &c0);
        assert!(matches!(sm_sinr(&direct, &[], 0, 10.0), Err(Error::IllConditioned(_))));
    }
}
