use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of every node to exactly one community, with dense ids
/// `0..community_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    community_count: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering them densely in
    /// order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::with_capacity(labels.len());
        let assignment = labels
            .iter()
            .map(|&label| {
                let next = remap.len();
                *remap.entry(label).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            community_count: remap.len(),
        }
    }

    /// Validates that `assignment` already uses exactly the ids `0..k`.
    pub fn from_dense(assignment: Vec<usize>) -> Result<Self> {
        let community_count = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; community_count];
        for &c in &assignment {
            seen[c] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!(
                "community ids are not dense: id {missing} is unused"
            )));
        }
        Ok(Partition {
            assignment,
            community_count,
        })
    }

    pub fn singletons(node_count: usize) -> Self {
        Partition {
            assignment: (0..node_count).collect(),
            community_count: node_count,
        }
    }

    pub fn all_in_one(node_count: usize) -> Self {
        Partition {
            assignment: vec![0; node_count],
            community_count: usize::from(node_count > 0),
        }
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Member lists indexed by community id; each list is in ascending node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.community_count];
        for (node, &c) in self.assignment.iter().enumerate() {
            members[c].push(node);
        }
        members
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Composes `self` (nodes to communities) with a partition of those
    /// communities, yielding a partition of the original nodes.
    pub fn compose(&self, upper: &Partition) -> Partition {
        debug_assert_eq!(upper.node_count(), self.community_count);
        let labels: Vec<usize> = self
            .assignment
            .iter()
            .map(|&c| upper.community_of(c))
            .collect();
        Partition::from_labels(&labels)
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.assignment.len() != expected {
            return Err(Error::validation(format!(
                "partition covers {} nodes, expected {expected}",
                self.assignment.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_densified_in_first_appearance_order() {
        let p = Partition::from_labels(&[7, 3, 7, 9]);
        assert_eq!(p.assignment(), &[0, 1, 0, 2]);
        assert_eq!(p.community_count(), 3);
        assert_eq!(p.members(), vec![vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn from_dense_rejects_gaps() {
        assert!(Partition::from_dense(vec![0, 2]).is_err());
        assert_eq!(Partition::from_dense(vec![1, 0, 1]).unwrap().community_count(), 2);
    }

    #[test]
    fn compose_flattens_levels() {
        let lower = Partition::from_labels(&[0, 0, 1, 2, 2]);
        let upper = Partition::from_labels(&[0, 1, 0]);
        assert_eq!(lower.compose(&upper).assignment(), &[0, 0, 1, 0, 0]);
    }

    #[test]
    fn empty_partition() {
        assert_eq!(Partition::all_in_one(0).community_count(), 0);
        assert_eq!(Partition::singletons(0).community_count(), 0);
    }
}
