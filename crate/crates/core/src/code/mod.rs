//! The binary linear block code shared by all users.
//!
//! A [`CodeSpec`] holds the sparse parity-check structure used by the belief
//! propagation decoders and a systematic encoder derived from it by Gaussian
//! elimination over GF(2). Message bits sit at the non-pivot columns of the
//! reduced parity-check matrix; each pivot column is a parity bit computed as
//! a GF(2) dot product with the message.

mod alist;
mod bp;
mod joint;
mod qc;

use std::sync::OnceLock;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use alist::{load_code, to_alist};
pub use bp::{decode_soft, decode_soft_detailed, SoftDecodeOutput, LLR_LIMIT};
pub use joint::{
    decode_joint, group_convolution_direct, wht_check_update, JointDecodeOutput, VectorSymbolDistribution,
    PROB_FLOOR,
};
pub use qc::{qc_peg_code, DEFAULT_LIFTING, DEFAULT_SEED};

/// Default number of belief-propagation iterations.
pub const DEFAULT_MAX_ITERS: usize = 50;

/// Information bits of one user. Bits are stored one per byte, 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message {
    bits: Vec<u8>,
}

/// Coded bits of one user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    bits: Vec<u8>,
}

fn check_bits(bits: &[u8]) -> Result<()> {
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::Domain("bit values must be 0 or 1".into()));
    }
    Ok(())
}

impl Message {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        check_bits(&bits)?;
        Ok(Message { bits })
    }

    pub fn zeros(len: usize) -> Self {
        Message { bits: vec![0; len] }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Message { bits: (0..len).map(|_| rng.random_range(0..2u8)).collect() }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn xor(&self, other: &Message) -> Result<Message> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "message lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Message { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect() })
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        Message { bits }
    }
}

impl Codeword {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        check_bits(&bits)?;
        Ok(Codeword { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn xor(&self, other: &Codeword) -> Result<Codeword> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch("codeword lengths differ".into()));
        }
        Ok(Codeword { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect() })
    }
}

/// Bitwise XOR of a nonempty set of equal-length messages.
pub fn xor_messages<'a, I>(messages: I) -> Result<Message>
where
    I: IntoIterator<Item = &'a Message>,
{
    let mut iter = messages.into_iter();
    let first = iter.next().ok_or_else(|| Error::Domain("xor of an empty message set".into()))?;
    let mut acc = first.clone();
    for m in iter {
        if m.len() != acc.len() {
            return Err(Error::DimensionMismatch("message lengths differ".into()));
        }
        for (a, b) in acc.bits.iter_mut().zip(&m.bits) {
            *a ^= b;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
struct ParityEquation {
    position: usize,
    // Packed coefficients over the message bits.
    coeffs: Vec<u64>,
}

/// A binary linear code given by a sparse parity-check matrix.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    n: usize,
    k: usize,
    checks: Vec<Vec<usize>>,
    var_checks: Vec<Vec<usize>>,
    // Edge layout for message passing: edges are numbered check by check.
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
    info_positions: Vec<usize>,
    parity: Vec<ParityEquation>,
}

impl CodeSpec {
    /// Build from per-check variable lists. The systematic encoder is derived
    /// here; `k = n - rank(H)`.
    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCode("codeword length is zero".into()));
        }
        let mut checks = checks;
        for (c, vars) in checks.iter_mut().enumerate() {
            vars.sort_unstable();
            if vars.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidCode(format!("check {c} lists a position twice")));
            }
            if let Some(&v) = vars.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidCode(format!("check {c} references position {v} >= n")));
            }
            if vars.is_empty() {
                return Err(Error::InvalidCode(format!("check {c} is empty")));
            }
        }
        let mut var_checks = vec![Vec::new(); n];
        for (c, vars) in checks.iter().enumerate() {
            for &v in vars {
                var_checks[v].push(c);
            }
        }

        let mut check_ptr = Vec::with_capacity(checks.len() + 1);
        let mut edge_var = Vec::new();
        check_ptr.push(0);
        for vars in &checks {
            edge_var.extend_from_slice(vars);
            check_ptr.push(edge_var.len());
        }
        let mut var_lists = vec![Vec::new(); n];
        for (e, &v) in edge_var.iter().enumerate() {
            var_lists[v].push(e);
        }
        let mut var_ptr = Vec::with_capacity(n + 1);
        let mut var_edges = Vec::with_capacity(edge_var.len());
        var_ptr.push(0);
        for list in &var_lists {
            var_edges.extend_from_slice(list);
            var_ptr.push(var_edges.len());
        }

        let (info_positions, parity) = systematic_encoder(n, &checks);
        let k = info_positions.len();
        if k == 0 {
            return Err(Error::InvalidCode("parity-check matrix has full column rank; k = 0".into()));
        }
        if k == n {
            return Err(Error::InvalidCode("parity-check matrix has rank 0; k = n".into()));
        }
        Ok(CodeSpec {
            n,
            k,
            checks,
            var_checks,
            check_ptr,
            edge_var,
            var_ptr,
            var_edges,
            info_positions,
            parity,
        })
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.checks
    }

    pub fn num_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn var_checks(&self, v: usize) -> &[usize] {
        &self.var_checks[v]
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Rank of the parity-check matrix over GF(2).
    pub fn parity_rank(&self) -> usize {
        self.n - self.k
    }

    /// Codeword positions carrying the message bits, in message order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub(crate) fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    pub(crate) fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e]
    }

    pub(crate) fn var_edge_list(&self, v: usize) -> &[usize] {
        &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
    }

    pub fn encode(&self, u: &Message) -> Result<Codeword> {
        if u.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "message has {} bits, code expects {}",
                u.len(),
                self.k
            )));
        }
        Ok(Codeword { bits: self.encode_bits(u.bits()) })
    }

    pub(crate) fn encode_bits(&self, u: &[u8]) -> Vec<u8> {
        let mut packed = vec![0u64; self.k.div_ceil(64)];
        for (i, &b) in u.iter().enumerate() {
            packed[i / 64] |= (b as u64) << (i % 64);
        }
        let mut c = vec![0u8; self.n];
        for (&pos, &b) in self.info_positions.iter().zip(u) {
            c[pos] = b;
        }
        for eq in &self.parity {
            let ones: u32 = eq.coeffs.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            c[eq.position] = (ones & 1) as u8;
        }
        c
    }

    /// Message bits read off a codeword (no validity check).
    pub fn extract_message(&self, bits: &[u8]) -> Message {
        Message::from_bits_unchecked(self.info_positions.iter().map(|&p| bits[p]).collect())
    }

    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self.checks.iter().all(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ bits[v]) == 0)
    }

    pub fn is_codeword(&self, c: &Codeword) -> bool {
        self.syndrome_ok(c.bits())
    }

    /// Short hex digest of the parity structure.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for vars in &self.checks {
            h.update((vars.len() as u64).to_le_bytes());
            for &v in vars {
                h.update((v as u64).to_le_bytes());
            }
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Rows of the dense generator matrix, one per message bit.
    pub fn generator_rows(&self) -> Vec<Vec<u8>> {
        (0..self.k)
            .map(|i| {
                let mut u = vec![0u8; self.k];
                u[i] = 1;
                self.encode_bits(&u)
            })
            .collect()
    }
}

/// Reduce H to echelon form scanning columns right to left, so that for
/// codes whose parity part sits on the right the message occupies the first
/// positions.
fn systematic_encoder(n: usize, checks: &[Vec<usize>]) -> (Vec<usize>, Vec<ParityEquation>) {
    let words = n.div_ceil(64);
    let mut rows: Vec<Vec<u64>> = checks
        .iter()
        .map(|vars| {
            let mut r = vec![0u64; words];
            for &v in vars {
                r[v / 64] ^= 1 << (v % 64);
            }
            r
        })
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in (0..n).rev() {
        if rank == rows.len() {
            break;
        }
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[w] & bit != 0 {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let info: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let k = info.len();
    let parity = pivots
        .iter()
        .enumerate()
        .map(|(r, &pos)| {
            let mut coeffs = vec![0u64; k.div_ceil(64).max(1)];
            for (j, &col) in info.iter().enumerate() {
                if (rows[r][col / 64] >> (col % 64)) & 1 == 1 {
                    coeffs[j / 64] |= 1 << (j % 64);
                }
            }
            ParityEquation { position: pos, coeffs }
        })
        .collect();
    (info, parity)
}

/// The built-in rate-1/2 length-576 quasi-cyclic code, built once.
pub fn default_code() -> &'static CodeSpec {
    static CODE: OnceLock<CodeSpec> = OnceLock::new();
    CODE.get_or_init(|| qc_peg_code(DEFAULT_LIFTING, DEFAULT_SEED).expect("default code is valid"))
}
