//! Random test objects: Hermitian matrices, unitaries, states, POVMs and
//! channel curves.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::{ParametricChannel, QuasiClassical, Remixed, Stinespring, KrausFamily};
use crate::error::Result;
use crate::linalg::{c, hermitian_map, unitary_exp, CMatrix, CVector};
use crate::quantum::{Povm, PureState};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Hermitian matrix with entries of order `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> CMatrix {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()).scale(0.5 * scale)
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    unitary_exp(&random_hermitian(rng, d, 2.0)).expect("Hermitian by construction")
}

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> PureState {
    loop {
        let v = CVector::from_fn(d, |_, _| c(gaussian(rng), gaussian(rng)));
        if let Ok(s) = PureState::normalized(v) {
            return s;
        }
    }
}

/// POVM with `r` full-rank elements, M_m = S^{-1/2} A_m S^{-1/2}.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, d: usize, r: usize) -> Result<Povm> {
    let a: Vec<CMatrix> = (0..r)
        .map(|_| {
            let g = ginibre(rng, d, d);
            &g * g.adjoint()
        })
        .collect();
    let s = a.iter().fold(CMatrix::zeros(d, d), |acc, x| acc + x);
    let s_inv_half = hermitian_map(&s, |x| 1.0 / x.sqrt())?;
    let elements = a
        .iter()
        .map(|x| {
            let m = &s_inv_half * x * &s_inv_half;
            (&m + m.adjoint()).scale(0.5)
        })
        .collect();
    Povm::new(elements)
}

/// Kraus curve θ ↦ blocks of exp(−i(G₀ + Σθ^l G_l)) with `count` Kraus
/// operators, a random pure input and domain [−1, 1]^m.
pub fn random_stinespring_family<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    count: usize,
    m: usize,
) -> Result<Stinespring> {
    let n = d * count;
    let offset = random_hermitian(rng, n, 1.0);
    let gens = (0..m).map(|_| random_hermitian(rng, n, 0.5)).collect();
    Stinespring::new(d, count, offset, gens)
}

pub fn random_stinespring<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    count: usize,
    m: usize,
) -> Result<ParametricChannel> {
    let fam = random_stinespring_family(rng, d, count, m)?;
    let input = random_state(rng, d);
    ParametricChannel::from_kraus("random-stinespring", Arc::new(fam), input, vec![(-1.0, 1.0); m])
}

/// Quasi-classical curve E_k = √q_k W Xᵏ V† on input V|0⟩, with `count ≤ d`
/// components, so that the output eigenvectors W|k⟩ are θ-independent.
pub fn random_quasi_classical<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    count: usize,
    m: usize,
) -> Result<ParametricChannel> {
    let count = count.clamp(1, d);
    let w = random_unitary(rng, d);
    let v = random_unitary(rng, d);
    let shift = CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { c(1., 0.) } else { c(0., 0.) });
    let mut power = crate::linalg::identity(d);
    let mut unitaries = Vec::with_capacity(count);
    for _ in 0..count {
        unitaries.push(&w * &power * v.adjoint());
        power = &shift * power;
    }
    let bias = (0..count).map(|_| gaussian(rng) * 0.5).collect();
    let slopes = (0..count)
        .map(|_| (0..m).map(|_| gaussian(rng)).collect())
        .collect();
    let fam = QuasiClassical::new(unitaries, bias, slopes)?;
    let input = PureState::new(v.column(0).into_owned())?;
    ParametricChannel::from_kraus("random-quasi-classical", Arc::new(fam), input, vec![(-1.0, 1.0); m])
}

/// Same channel with its Kraus operators remixed by u(θ) = exp(−iΣθ^l G_l)·U₀;
/// `theta_dependent = false` leaves only the fixed U₀.
pub fn random_remix<R: Rng + ?Sized>(
    rng: &mut R,
    ch: &ParametricChannel,
    theta_dependent: bool,
) -> Result<ParametricChannel> {
    let base = ch.kraus_family()?.clone();
    let n = base.kraus_at(&vec![0.0; base.param_count()])?.len();
    let fixed = random_unitary(rng, n);
    let gens = (0..base.param_count())
        .map(|_| {
            if theta_dependent {
                random_hermitian(rng, n, 0.7)
            } else {
                CMatrix::zeros(n, n)
            }
        })
        .collect();
    let fam: Arc<dyn KrausFamily> = Arc::new(Remixed::new(base, fixed, gens)?);
    ParametricChannel::from_kraus(
        format!("{}-remixed", ch.name()),
        fam,
        ch.pure_input()?.clone(),
        ch.domain().to_vec(),
    )
}
