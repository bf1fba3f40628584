use std::fmt;

use crate::error::{Result, SfmError};

/// A subset of the ground set `0..n`, stored as membership flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    members: Vec<bool>,
}

impl Subset {
    pub fn empty(n: usize) -> Self {
        Subset {
            members: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Subset {
            members: vec![true; n],
        }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(SfmError::input(format!(
                    "element {i} is outside the ground set of size {n}"
                )));
            }
            members[i] = true;
        }
        Ok(Subset { members })
    }

    /// Bit `i` of `mask` is membership of element `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64);
        Subset {
            members: (0..n).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn from_members(members: Vec<bool>) -> Self {
        Subset { members }
    }

    pub fn ground_size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.get(i).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.members[i]).collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.members
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
