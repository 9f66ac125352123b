//! Cosine similarity and the NT-Xent loss with its analytic gradient.

use crate::error::{Error, Result};

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "cosine similarity",
            expected: u.len(),
            actual: v.len(),
        });
    }
    let uu = dot(u, u);
    let vv = dot(v, v);
    if !(uu > 0.0) {
        return Err(Error::ZeroNorm(0));
    }
    if !(vv > 0.0) {
        return Err(Error::ZeroNorm(1));
    }
    Ok((dot(u, v) / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `2N` projected views and the perfect matching pairing them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    vectors: Vec<Vec<f64>>,
    partner: Vec<usize>,
}

impl EmbeddingBatch {
    pub fn new(vectors: Vec<Vec<f64>>, partner: Vec<usize>) -> Result<Self> {
        let n = vectors.len();
        if n < 2 {
            return Err(Error::InvalidConfig(format!("batch needs ≥ 2 views, got {n}")));
        }
        if partner.len() != n {
            return Err(Error::DimensionMismatch {
                context: "pairing length",
                expected: n,
                actual: partner.len(),
            });
        }
        for (i, &p) in partner.iter().enumerate() {
            if p >= n || p == i || partner[p] != i {
                return Err(Error::InvalidConfig(format!("pairing is not a perfect matching at {i}")));
            }
        }
        let dim = vectors[0].len();
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "embedding dimension",
                    expected: dim,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("embedding batch"));
            }
        }
        Ok(Self { vectors, partner })
    }

    /// Stacks `[z_i…, z_j…]` so that view `k` pairs with view `k + N`.
    pub fn from_views(first: Vec<Vec<f64>>, second: Vec<Vec<f64>>) -> Result<Self> {
        let n = first.len();
        if second.len() != n {
            return Err(Error::DimensionMismatch {
                context: "view counts",
                expected: n,
                actual: second.len(),
            });
        }
        let partner = (0..2 * n).map(|k| (k + n) % (2 * n)).collect();
        let mut vectors = first;
        vectors.extend(second);
        Self::new(vectors, partner)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.vectors
    }

    pub fn partner(&self, i: usize) -> usize {
        self.partner[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtXentConfig {
    pub temperature: f64,
}

impl Default for NtXentConfig {
    fn default() -> Self {
        Self { temperature: 0.07 }
    }
}

/// Loss value plus `∂L/∂z` for every view.
#[derive(Debug, Clone, PartialEq)]
pub struct NtXentOutput {
    pub loss: f64,
    pub grad: Vec<Vec<f64>>,
}

struct Normalized {
    units: Vec<Vec<f64>>,
    norms: Vec<f64>,
    // row-major (2N)², s[i][k] = u_i·u_k / τ
    logits: Vec<f64>,
}

fn normalize(batch: &EmbeddingBatch, cfg: &NtXentConfig) -> Result<Normalized> {
    if !(cfg.temperature > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {}",
            cfg.temperature
        )));
    }
    let n = batch.len();
    let mut units = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for (i, z) in batch.vectors.iter().enumerate() {
        let nz = norm(z);
        if !(nz > 0.0) {
            return Err(Error::ZeroNorm(i));
        }
        norms.push(nz);
        units.push(z.iter().map(|v| v / nz).collect::<Vec<_>>());
    }
    let mut logits = vec![0.0; n * n];
    for i in 0..n {
        for k in i..n {
            let s = dot(&units[i], &units[k]) / cfg.temperature;
            logits[i * n + k] = s;
            logits[k * n + i] = s;
        }
    }
    Ok(Normalized { units, norms, logits })
}

/// Softmax over `k ≠ i` of row `i`, written into `probs` (entry `i` is 0),
/// returning `log Σ_{k≠i} exp(s_ik)`.
fn row_softmax(logits: &[f64], n: usize, i: usize, probs: &mut [f64]) -> f64 {
    let row = &logits[i * n..(i + 1) * n];
    let max = row
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for k in 0..n {
        probs[k] = if k == i { 0.0 } else { (row[k] - max).exp() };
        total += probs[k];
    }
    probs.iter_mut().for_each(|p| *p /= total);
    max + total.ln()
}

/// Mean over all `2N` anchors of `−log softmax_{k≠i}(s_ik)[partner(i)]`.
pub fn nt_xent_loss(batch: &EmbeddingBatch, cfg: &NtXentConfig) -> Result<f64> {
    let norm = normalize(batch, cfg)?;
    let n = batch.len();
    let mut probs = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        let lse = row_softmax(&norm.logits, n, i, &mut probs);
        total += lse - norm.logits[i * n + batch.partner[i]];
    }
    Ok(total / n as f64)
}

pub fn nt_xent_gradient(batch: &EmbeddingBatch, cfg: &NtXentConfig) -> Result<Vec<Vec<f64>>> {
    Ok(nt_xent(batch, cfg)?.grad)
}

/// Loss and gradient in one pass.
///
/// With `u = z/‖z‖` and `P_ik` the anchor-`i` softmax,
/// `∂L/∂u_i = 1/(2N·τ) · Σ_{k≠i} (P_ik + P_ki − 2·[k = partner(i)]) · u_k`,
/// then `∂L/∂z_i = (I − u_i u_iᵀ) · ∂L/∂u_i / ‖z_i‖`.
pub fn nt_xent(batch: &EmbeddingBatch, cfg: &NtXentConfig) -> Result<NtXentOutput> {
    let norm = normalize(batch, cfg)?;
    let n = batch.len();
    let dim = batch.vectors[0].len();

    let mut probs = vec![0.0; n * n];
    let mut total = 0.0;
    for i in 0..n {
        let lse = row_softmax(&norm.logits, n, i, &mut probs[i * n..(i + 1) * n]);
        total += lse - norm.logits[i * n + batch.partner[i]];
    }
    let loss = total / n as f64;

    let scale = 1.0 / (n as f64 * cfg.temperature);
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let mut du = vec![0.0; dim];
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut coeff = probs[i * n + k] + probs[k * n + i];
            if k == batch.partner[i] {
                coeff -= 2.0;
            }
            let c = scale * coeff;
            for (d, u) in du.iter_mut().zip(&norm.units[k]) {
                *d += c * u;
            }
        }
        let ui = &norm.units[i];
        let radial = dot(&du, ui);
        grad.push(
            du.iter()
                .zip(ui)
                .map(|(d, u)| (d - radial * u) / norm.norms[i])
                .collect(),
        );
    }
    Ok(NtXentOutput { loss, grad })
}
