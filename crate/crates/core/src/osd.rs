//! Ordered elimination: a fast, approximate alternative to exact decoding.
//!
//! Edges are sorted by weight and the parity-check matrix is row reduced in
//! that column order. Every syndrome is then explained by pivot columns only,
//! which gives a feasible, low-weight (but not necessarily minimum) edge set in
//! time quadratic in the number of checks. The exact decoder becomes
//! impractical far above threshold, where this one is used for sanity runs.

use crate::decoder::{DecodeError, DecodeResult, Decoder, DecodingInstance, PreparedDecoder};

type Bits = Vec<u64>;

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

fn get(b: &[u64], i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OrderedEliminationDecoder;

impl Decoder for OrderedEliminationDecoder {
    fn name(&self) -> &'static str {
        "ordered-elimination"
    }
    fn decode(&self, instance: &DecodingInstance, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
        PreparedElimination::new(instance).decode(syndrome)
    }
    fn prepare(&self, instance: &DecodingInstance) -> Box<dyn PreparedDecoder> {
        Box::new(PreparedElimination::new(instance))
    }
}

/// Row-reduced form of one instance, reusable across syndromes.
pub struct PreparedElimination {
    instance: DecodingInstance,
    /// Row operations applied to the checks; row `r` of the reduced system is
    /// the XOR of the checks set in `transform[r]`.
    transform: Vec<Bits>,
    /// Pivot edge of reduced rows `0..rank`.
    pivots: Vec<usize>,
}

impl PreparedElimination {
    pub fn new(instance: &DecodingInstance) -> Self {
        let n = instance.num_checks;
        let mut order: Vec<usize> = (0..instance.edges.len()).collect();
        order.sort_by(|&a, &b| instance.edges[a].weight.total_cmp(&instance.edges[b].weight).then(a.cmp(&b)));
        let cols = order.len();
        let mut rows: Vec<Bits> = vec![vec![0; words(cols)]; n];
        for (k, &e) in order.iter().enumerate() {
            for &v in &instance.edges[e].vertices {
                rows[v][k / 64] ^= 1 << (k % 64);
            }
        }
        let mut transform: Vec<Bits> = (0..n)
            .map(|i| {
                let mut t = vec![0; words(n)];
                t[i / 64] |= 1 << (i % 64);
                t
            })
            .collect();
        let mut pivots = Vec::new();
        for (k, &e) in order.iter().enumerate() {
            let rank = pivots.len();
            if rank == n {
                break;
            }
            let Some(r) = (rank..n).find(|&r| get(&rows[r], k)) else { continue };
            rows.swap(rank, r);
            transform.swap(rank, r);
            let (pivot_row, pivot_t) = (rows[rank].clone(), transform[rank].clone());
            for i in 0..n {
                if i != rank && get(&rows[i], k) {
                    xor_into(&mut rows[i], &pivot_row);
                    xor_into(&mut transform[i], &pivot_t);
                }
            }
            pivots.push(e);
        }
        PreparedElimination { instance: instance.clone(), transform, pivots }
    }
}

impl PreparedDecoder for PreparedElimination {
    fn decode(&self, syndrome: &[bool]) -> Result<DecodeResult, DecodeError> {
        let n = self.instance.num_checks;
        if syndrome.len() != n {
            return Err(DecodeError::LengthMismatch { syndrome: syndrome.len(), checks: n });
        }
        let mut packed = vec![0u64; words(n)];
        for (i, _) in syndrome.iter().enumerate().filter(|(_, b)| **b) {
            packed[i / 64] |= 1 << (i % 64);
        }
        let parity = |t: &Bits| t.iter().zip(&packed).fold(0, |acc, (a, b)| acc ^ (a & b).count_ones()) & 1 == 1;
        for t in &self.transform[self.pivots.len()..] {
            if parity(t) {
                let check = (0..n).find(|&i| syndrome[i] && get(t, i)).unwrap_or(0);
                return Err(DecodeError::Infeasible { check });
            }
        }
        let mut edges: Vec<usize> =
            self.pivots.iter().zip(&self.transform).filter(|(_, t)| parity(t)).map(|(&e, _)| e).collect();
        edges.sort_unstable();
        let objective = edges.iter().map(|&e| self.instance.edges[e].weight).sum();
        let mask = edges.iter().fold(0, |m, &e| m ^ self.instance.edges[e].mask);
        Ok(DecodeResult { edges, objective, mask, residual: vec![false; n] })
    }
}
