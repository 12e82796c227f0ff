//! Seeded progressive-edge-growth construction of a quasi-cyclic rate-1/2
//! code.
//!
//! The 12x24 base matrix has a fixed dual-diagonal parity part (one weight-3
//! column, then a staircase) and an information part whose entries are placed
//! one circulant at a time. Each placement picks the base row and circulant
//! shift that maximise the distance, in the current lifted Tanner graph, from
//! the first variable of the column to the new check, preferring low-degree
//! rows. Remaining ties are broken by a seeded RNG, so the result is fixed
//! for a given `(lifting, seed)`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CodeSpec;
use crate::error::{Error, Result};

/// Lifting factor of the default code (24 x 24 = 576).
pub const DEFAULT_LIFTING: usize = 24;
/// Seed of the default code.
pub const DEFAULT_SEED: u64 = 0x5eed_0576;

const BASE_ROWS: usize = 12;
const BASE_COLS: usize = 24;
// Information column degrees: seven of degree 3 and five of degree 6.
const INFO_DEGREES: [usize; 12] = [3, 3, 3, 3, 3, 3, 3, 6, 6, 6, 6, 6];

#[derive(Debug, Clone, Copy)]
struct Circulant {
    row: usize,
    col: usize,
    shift: usize,
}

struct Lifted {
    z: usize,
    entries: Vec<Circulant>,
}

impl Lifted {
    // Check (row, i) is adjacent to variable (col, (i + shift) mod z).
    fn var_neighbors(&self, col: usize, t: usize, out: &mut Vec<usize>) {
        out.clear();
        for e in self.entries.iter().filter(|e| e.col == col) {
            out.push(e.row * self.z + (t + self.z - e.shift) % self.z);
        }
    }

    fn check_neighbors(&self, row: usize, i: usize, out: &mut Vec<usize>) {
        out.clear();
        for e in self.entries.iter().filter(|e| e.row == row) {
            out.push(e.col * self.z + (i + e.shift) % self.z);
        }
    }

    /// BFS distance (in edges) from variable `col*z` to every check node.
    fn check_distances(&self, col: usize) -> Vec<usize> {
        let z = self.z;
        let mut var_dist = vec![usize::MAX; BASE_COLS * z];
        let mut chk_dist = vec![usize::MAX; BASE_ROWS * z];
        let mut queue = VecDeque::new();
        var_dist[col * z] = 0;
        queue.push_back((true, col * z));
        let mut buf = Vec::new();
        while let Some((is_var, node)) = queue.pop_front() {
            if is_var {
                let d = var_dist[node];
                self.var_neighbors(node / z, node % z, &mut buf);
                for &c in &buf {
                    if chk_dist[c] == usize::MAX {
                        chk_dist[c] = d + 1;
                        queue.push_back((false, c));
                    }
                }
            } else {
                let d = chk_dist[node];
                self.check_neighbors(node / z, node % z, &mut buf);
                for &v in &buf {
                    if var_dist[v] == usize::MAX {
                        var_dist[v] = d + 1;
                        queue.push_back((true, v));
                    }
                }
            }
        }
        chk_dist
    }
}

/// Build the quasi-cyclic rate-1/2 code with lifting factor `z` (length 24z).
pub fn qc_peg_code(z: usize, seed: u64) -> Result<CodeSpec> {
    if z < 4 {
        return Err(Error::InvalidCode("lifting factor must be at least 4".into()));
    }
    let mut graph = Lifted { z, entries: Vec::new() };
    let info_cols = BASE_COLS - BASE_ROWS;
    // Weight-3 column followed by the staircase.
    for (row, shift) in [(0, 1), (5, 0), (11, 1)] {
        graph.entries.push(Circulant { row, col: info_cols, shift });
    }
    for j in 0..BASE_ROWS - 1 {
        graph.entries.push(Circulant { row: j, col: info_cols + 1 + j, shift: 0 });
        graph.entries.push(Circulant { row: j + 1, col: info_cols + 1 + j, shift: 0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..info_cols).collect();
    order.sort_by_key(|&c| INFO_DEGREES[c]);
    for col in order {
        for _ in 0..INFO_DEGREES[col] {
            let dist = graph.check_distances(col);
            let mut row_degree = [0usize; BASE_ROWS];
            for e in &graph.entries {
                row_degree[e.row] += 1;
            }
            let used: Vec<usize> = graph.entries.iter().filter(|e| e.col == col).map(|e| e.row).collect();
            let mut best: Option<(usize, isize)> = None;
            let mut ties: Vec<(usize, usize)> = Vec::new();
            for row in (0..BASE_ROWS).filter(|r| !used.contains(r)) {
                for shift in 0..z {
                    let check = row * z + (z - shift) % z;
                    let key = (dist[check], -(row_degree[row] as isize));
                    match best {
                        Some(b) if key < b => {}
                        Some(b) if key == b => ties.push((row, shift)),
                        _ => {
                            best = Some(key);
                            ties.clear();
                            ties.push((row, shift));
                        }
                    }
                }
            }
            let (row, shift) = ties[rng.random_range(0..ties.len())];
            graph.entries.push(Circulant { row, col, shift });
        }
    }

    let mut checks = vec![Vec::new(); BASE_ROWS * z];
    for e in &graph.entries {
        for i in 0..z {
            checks[e.row * z + i].push(e.col * z + (i + e.shift) % z);
        }
    }
    CodeSpec::from_checks(BASE_COLS * z, checks)
}
