//! Canonical multi-index tables.
//!
//! A symmetric tensor of degree `p` on `R^d` is stored by its values on
//! nondecreasing multi-indices `i_1 <= ... <= i_p`, enumerated in
//! lexicographic order. There are `C(d+p-1, p)` of them. For `d = 2, p = 2`
//! the order is `(0,0), (0,1), (1,1)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Number of nondecreasing multi-indices of length `p` over `d` letters.
pub fn canonical_count(d: usize, p: usize) -> usize {
    // C(d+p-1, p), computed exactly in u128 for the sizes used here
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..p as u128 {
        num *= d as u128 + i;
        den *= i + 1;
    }
    (num / den) as usize
}

/// Enumeration of canonical multi-indices of one degree plus navigation tables.
#[derive(Debug)]
pub struct DegreeTable {
    pub dim: usize,
    pub degree: usize,
    /// Flat storage, `degree` entries per multi-index.
    indices: Vec<u16>,
    /// Number of distinct orderings of each multi-index, `p!/prod(m_a!)`.
    multiplicity: Vec<f64>,
    /// For degree >= 1: position of the multi-index with its last letter removed.
    parent: Vec<u32>,
    /// `raise[idx * dim + a]`: position of `idx + {a}` in the degree+1 table.
    raise: OnceLock<Vec<u32>>,
}

impl DegreeTable {
    pub fn len(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiplicity.is_empty()
    }

    pub fn multi_index(&self, idx: usize) -> &[u16] {
        &self.indices[idx * self.degree..(idx + 1) * self.degree]
    }

    pub fn multiplicity(&self, idx: usize) -> f64 {
        self.multiplicity[idx]
    }

    pub fn multiplicities(&self) -> &[f64] {
        &self.multiplicity
    }

    /// Position of the multi-index with its last letter removed, and that letter.
    pub fn parent(&self, idx: usize) -> (usize, usize) {
        let last = self.indices[(idx + 1) * self.degree - 1] as usize;
        (self.parent[idx] as usize, last)
    }

    /// Position in the degree+1 table of this multi-index with letter `a` inserted.
    pub fn raised(&self, idx: usize, a: usize) -> usize {
        self.raise_table()[idx * self.dim + a] as usize
    }

    pub fn raise_table(&self) -> &[u32] {
        self.raise.get_or_init(|| {
            let next = table(self.dim, self.degree + 1);
            let mut out = Vec::with_capacity(self.len() * self.dim);
            let mut buf = Vec::with_capacity(self.degree + 1);
            for idx in 0..self.len() {
                let mi = self.multi_index(idx);
                for a in 0..self.dim as u16 {
                    buf.clear();
                    let pos = mi.partition_point(|&x| x <= a);
                    buf.extend_from_slice(&mi[..pos]);
                    buf.push(a);
                    buf.extend_from_slice(&mi[pos..]);
                    out.push(next.rank(&buf) as u32);
                }
            }
            out
        })
    }

    /// Lexicographic rank of a nondecreasing multi-index.
    pub fn rank(&self, mi: &[u16]) -> usize {
        debug_assert_eq!(mi.len(), self.degree);
        debug_assert!(mi.windows(2).all(|w| w[0] <= w[1]));
        let d = self.dim;
        let p = self.degree;
        let mut r = 0;
        let mut lo = 0usize;
        for (k, &v) in mi.iter().enumerate() {
            let remaining = p - k - 1;
            for smaller in lo..v as usize {
                r += canonical_count(d - smaller, remaining);
            }
            lo = v as usize;
        }
        r
    }
}

fn build(dim: usize, degree: usize) -> DegreeTable {
    assert!(dim >= 1 && dim <= u16::MAX as usize);
    let n = canonical_count(dim, degree);
    let mut indices = Vec::with_capacity(n * degree);
    let mut multiplicity = Vec::with_capacity(n);
    let mut current = vec![0u16; degree];
    let fact = |k: usize| (1..=k).fold(1.0, |acc, i| acc * i as f64);
    loop {
        indices.extend_from_slice(&current);
        let mut m = fact(degree);
        let mut run = 1;
        for w in current.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                m /= fact(run);
                run = 1;
            }
        }
        if degree > 0 {
            m /= fact(run);
        }
        multiplicity.push(m);
        // next nondecreasing tuple in lexicographic order
        match (0..degree).rev().find(|&k| (current[k] as usize) < dim - 1) {
            Some(k) => {
                let v = current[k] + 1;
                current[k..].iter_mut().for_each(|slot| *slot = v);
            }
            None => break,
        }
    }
    debug_assert_eq!(multiplicity.len(), n);
    let parent = if degree == 0 {
        Vec::new()
    } else {
        let prev = table(dim, degree - 1);
        (0..n)
            .map(|idx| prev.rank(&indices[idx * degree..(idx + 1) * degree - 1]) as u32)
            .collect()
    };
    DegreeTable {
        dim,
        degree,
        indices,
        multiplicity,
        parent,
        raise: OnceLock::new(),
    }
}

type Cache = Mutex<HashMap<(usize, usize), Arc<DegreeTable>>>;

/// Shared table for `(dim, degree)`; built once per process.
pub fn table(dim: usize, degree: usize) -> Arc<DegreeTable> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(dim, degree)) {
        return Arc::clone(t);
    }
    // built outside the lock: `build` recurses into lower degrees
    let t = Arc::new(build(dim, degree));
    let mut guard = cache.lock().unwrap();
    Arc::clone(guard.entry((dim, degree)).or_insert(t))
}
