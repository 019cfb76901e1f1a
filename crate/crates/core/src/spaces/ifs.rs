//! Self-similar fractals realised as finite-depth address spaces.
//!
//! A word `a_1 a_2 ... a_L` names the point `w_{a_1} ∘ ... ∘ w_{a_L}(z*)`
//! where `z*` is the fixed point of `w_{a_L}`. Reading a finite word as the
//! eventually constant infinite word `a_1 ... a_L a_L a_L ...` makes corner
//! addresses such as `000...` land exactly on the corresponding vertex.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IfsFamily {
    /// Middle-thirds Cantor set, two maps of ratio 1/3 on [0, 1].
    Cantor,
    /// Sierpinski gasket, three maps of ratio 1/2 towards the unit triangle's corners.
    Gasket,
    /// Sierpinski carpet, eight maps of ratio 1/3 (3x3 grid minus the centre).
    Carpet,
}

/// An iterated function system of similarities `w_i(z) = ratio * z + offset_i`
/// in the plane, truncated at a fixed address depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Ifs {
    family: IfsFamily,
    ratio: f64,
    offsets: Vec<[f64; 2]>,
    fixed_points: Vec<[f64; 2]>,
    depth: usize,
}

impl Ifs {
    pub fn new(family: IfsFamily, depth: usize) -> Self {
        // (ratio, fixed points); offsets follow from w_i(v_i) = v_i
        let (ratio, fixed_points): (f64, Vec<[f64; 2]>) = match family {
            IfsFamily::Cantor => (1.0 / 3.0, vec![[0.0, 0.0], [1.0, 0.0]]),
            IfsFamily::Gasket => (0.5, vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]),
            IfsFamily::Carpet => {
                let mut vertices = Vec::with_capacity(8);
                for row in 0..3 {
                    for col in 0..3 {
                        if row == 1 && col == 1 {
                            continue;
                        }
                        vertices.push([col as f64 / 2.0, row as f64 / 2.0]);
                    }
                }
                (1.0 / 3.0, vertices)
            }
        };
        let offsets = fixed_points
            .iter()
            .map(|v| [v[0] * (1.0 - ratio), v[1] * (1.0 - ratio)])
            .collect();
        Self {
            family,
            ratio,
            offsets,
            fixed_points,
            depth,
        }
    }

    pub fn family(&self) -> IfsFamily {
        self.family
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet_size(&self) -> usize {
        self.offsets.len()
    }

    pub fn diameter(&self) -> f64 {
        match self.family {
            IfsFamily::Cantor | IfsFamily::Gasket => 1.0,
            IfsFamily::Carpet => 2f64.sqrt(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self.family {
            IfsFamily::Cantor => 0,
            IfsFamily::Gasket | IfsFamily::Carpet => 1,
        }
    }

    /// Fixed point of the map with the given letter.
    pub fn vertex(&self, letter: u8) -> [f64; 2] {
        self.fixed_points[letter as usize]
    }

    pub fn apply_letter(&self, letter: u8, z: [f64; 2]) -> [f64; 2] {
        let o = self.offsets[letter as usize];
        [self.ratio * z[0] + o[0], self.ratio * z[1] + o[1]]
    }

    /// Planar coordinates of a word.
    pub fn coords(&self, word: &[u8]) -> [f64; 2] {
        let Some(&last) = word.last() else {
            return self.fixed_points[0];
        };
        let mut z = self.fixed_points[last as usize];
        // the trailing run of `last` fixes z
        let run = word.iter().rev().take_while(|&&l| l == last).count();
        for &letter in word[..word.len() - run].iter().rev() {
            z = self.apply_letter(letter, z);
        }
        z
    }

    /// Smallest prefix length whose cylinders have diameter at most `scale`,
    /// capped at the configured depth.
    pub fn prefix_len_for(&self, scale: f64) -> usize {
        let mut k = 0;
        let mut size = self.diameter();
        while size > scale && k < self.depth {
            size *= self.ratio;
            k += 1;
        }
        k
    }

    /// Diameter of a cylinder of the given prefix length; zero at full depth
    /// since a depth-L word names a single point.
    pub fn cylinder_diameter(&self, prefix_len: usize) -> f64 {
        if prefix_len >= self.depth {
            0.0
        } else {
            self.diameter() * self.ratio.powi(prefix_len as i32)
        }
    }

    /// Extends `prefix` to full depth by repeating its last letter (letter 0
    /// for the empty prefix).
    pub fn pad(&self, prefix: &[u8]) -> Vec<u8> {
        let fill = prefix.last().copied().unwrap_or(0);
        let mut word = Vec::with_capacity(self.depth);
        word.extend_from_slice(&prefix[..prefix.len().min(self.depth)]);
        word.resize(self.depth, fill);
        word
    }

    /// All words of length `len`, in lexicographic order.
    pub fn words(&self, len: usize) -> Vec<Vec<u8>> {
        let base = self.alphabet_size();
        let count = base.pow(len as u32);
        (0..count)
            .map(|mut index| {
                let mut word = vec![0u8; len];
                for slot in word.iter_mut().rev() {
                    *slot = (index % base) as u8;
                    index /= base;
                }
                word
            })
            .collect()
    }

    /// Index of a prefix as a base-`alphabet_size` number.
    pub fn prefix_index(&self, word: &[u8], len: usize) -> usize {
        let base = self.alphabet_size();
        word[..len]
            .iter()
            .fold(0usize, |acc, &letter| acc * base + letter as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_addresses_hit_vertices() {
        let gasket = Ifs::new(IfsFamily::Gasket, 8);
        assert_eq!(gasket.coords(&[0; 8]), [0.0, 0.0]);
        assert_eq!(gasket.coords(&[1; 8]), [1.0, 0.0]);
        let top = gasket.coords(&[2; 8]);
        assert!((top[0] - 0.5).abs() < 1e-15);
        assert!((top[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn carpet_has_eight_branches() {
        let carpet = Ifs::new(IfsFamily::Carpet, 4);
        assert_eq!(carpet.alphabet_size(), 8);
        assert_eq!(carpet.words(1).len(), 8);
        assert_eq!(carpet.coords(&[7; 4]), [1.0, 1.0]);
    }

    #[test]
    fn prefix_length_tracks_scale() {
        let gasket = Ifs::new(IfsFamily::Gasket, 12);
        assert_eq!(gasket.prefix_len_for(1.0), 0);
        assert_eq!(gasket.prefix_len_for(0.5), 1);
        assert_eq!(gasket.prefix_len_for(0.3), 2);
        assert_eq!(gasket.prefix_len_for(1e-9), 12);
    }
}
