//! Reference implementations used only by tests. Everything here is
//! computed independently of the procmat routines it checks: dense
//! nalgebra linear algebra, Kraus sums and explicit Liouvillians.

use nalgebra::DMatrix;
use procmat::tensor::ComplexMatrix;
use procmat::C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand::SeedableRng;

pub type Na = DMatrix<C64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_na(m: &ComplexMatrix) -> Na {
    DMatrix::from_fn(m.rows(), m.cols(), |r, col| m[(r, col)])
}

pub fn from_na(m: &Na) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, col| m[(r, col)])
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Na {
    DMatrix::from_fn(rows, cols, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

/// Haar-ish random unitary from the QR factor of a Ginibre matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    from_na(&gaussian(rng, d, d).qr().q())
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize, scale: f64) -> ComplexMatrix {
    let g = gaussian(rng, d, d);
    from_na(&((&g + g.adjoint()) * c(0.5 * scale, 0.0)))
}

/// Random trace-preserving channel with `rank` Kraus operators, cut from
/// the columns of a random isometry `C^d → C^(d·rank)`.
pub fn random_kraus(rng: &mut impl Rng, d: usize, rank: usize) -> Vec<ComplexMatrix> {
    let v = gaussian(rng, d * rank, d).qr().q();
    (0..rank)
        .map(|k| from_na(&v.rows(k * d, d).into_owned()))
        .collect()
}

/// Kraus operators of `second ∘ first`.
pub fn compose_kraus(first: &[ComplexMatrix], second: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    second
        .iter()
        .flat_map(|b| first.iter().map(move |a| b.matmul(a)))
        .collect()
}

pub fn kron_na(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    from_na(&to_na(a).kronecker(&to_na(b)))
}

pub fn tensor_kraus(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| kron_na(x, y)))
        .collect()
}

/// Unit-trace Choi state `Σ_k |K_k⟩⟩⟨⟨K_k| / D`, indexed `output · D + input`.
pub fn choi_from_kraus(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let d = kraus[0].rows();
    let mut out = Na::zeros(d * d, d * d);
    for k in kraus {
        let v = Na::from_fn(d * d, 1, |i, _| k[(i / d, i % d)]);
        out += &v * v.adjoint();
    }
    from_na(&(out / c(d as f64, 0.0)))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    to_na(m).singular_values().iter().sum()
}

pub fn half_trace_norm_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * trace_norm(&(a - b))
}

pub fn eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = to_na(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    from_na(&to_na(m).exp())
}

/// Lindblad generator acting on row-major `vec(ρ)`, where
/// `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.
pub fn liouvillian(h: &ComplexMatrix, jumps: &[ComplexMatrix]) -> Na {
    let h = to_na(h);
    let d = h.nrows();
    let id = Na::identity(d, d);
    let mut l = (h.kronecker(&id) - id.kronecker(&h.transpose())) * c(0.0, -1.0);
    for j in jumps {
        let j = to_na(j);
        let jdj = j.adjoint() * &j;
        l += j.kronecker(&j.conjugate());
        l -= (jdj.kronecker(&id) + id.kronecker(&jdj.transpose())) * c(0.5, 0.0);
    }
    l
}

/// `ρ(t)` of the master equation by exponentiating the Liouvillian.
pub fn master_equation(
    h: &ComplexMatrix,
    jumps: &[ComplexMatrix],
    rho0: &ComplexMatrix,
    t: f64,
) -> ComplexMatrix {
    let d = rho0.rows();
    let prop = (liouvillian(h, jumps) * c(t, 0.0)).exp();
    let v = Na::from_fn(d * d, 1, |i, _| rho0[(i / d, i % d)]);
    let out = prop * v;
    ComplexMatrix::from_fn(d, d, |r, col| out[(r * d + col, 0)])
}

/// Choi state of the master-equation channel after time `t`.
pub fn master_equation_choi(h: &ComplexMatrix, jumps: &[ComplexMatrix], t: f64) -> ComplexMatrix {
    let d = h.rows();
    let prop = (liouvillian(h, jumps) * c(t, 0.0)).exp();
    // Choi[(a·D+b),(c·D+e)] = 𝓔(|b⟩⟨e|)[a,c] / D
    ComplexMatrix::from_fn(d * d, d * d, |r, col| {
        let (a, b) = (r / d, r % d);
        let (cc, e) = (col / d, col % d);
        prop[(a * d + cc, b * d + e)] / d as f64
    })
}

/// Binomial standard error of a fraction.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Unitary equality up to a global phase.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap = a.adjoint().matmul(b).trace();
    if overlap.norm() == 0.0 {
        return f64::INFINITY;
    }
    a.scale(overlap / overlap.norm()).max_abs_diff(b)
}

/// Textbook matrices in the standard computational basis.
pub mod gates {
    use super::*;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn h() -> ComplexMatrix {
        let s = 1.0 / 2f64.sqrt();
        ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
    }

    /// Permutation matrix of a classical reversible map on `n` bits
    /// (bit 0 most significant).
    pub fn permutation(n: usize, f: impl Fn(usize) -> usize) -> ComplexMatrix {
        let d = 1 << n;
        ComplexMatrix::from_fn(d, d, |r, col| {
            if f(col) == r {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    pub fn cnot() -> ComplexMatrix {
        permutation(2, |x| if x & 0b10 != 0 { x ^ 1 } else { x })
    }

    pub fn toffoli() -> ComplexMatrix {
        permutation(3, |x| if x & 0b110 == 0b110 { x ^ 1 } else { x })
    }

    /// Amplitude damping with decay probability `p`.
    pub fn amplitude_damping(p: f64) -> Vec<ComplexMatrix> {
        vec![
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - p).sqrt()]]),
            ComplexMatrix::from_real_rows(&[&[0.0, p.sqrt()], &[0.0, 0.0]]),
        ]
    }

    /// Depolarising channel `ρ ↦ (1−p)ρ + p·𝟙/2`.
    pub fn depolarizing(p: f64) -> Vec<ComplexMatrix> {
        let y = ComplexMatrix::from_fn(2, 2, |r, col| match (r, col) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        let z = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let q = (p / 4.0).sqrt();
        vec![
            ComplexMatrix::identity(2).scale_real((1.0 - 3.0 * p / 4.0).sqrt()),
            x().scale_real(q),
            y.scale_real(q),
            z.scale_real(q),
        ]
    }
}
