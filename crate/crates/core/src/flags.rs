//! Diagnostic flags attached to fairness and bound values.

use std::fmt;

bitflags::bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct Flags: u32 {
        /// A group with no examples contributed a conventional zero.
        const EMPTY_GROUP = 1;
        /// A conditioning event had zero empirical mass; the value is 0 by convention.
        const ZERO_MASS = 1 << 1;
        /// A zero margin with a nonzero coefficient made a term infinite.
        const INFINITE = 1 << 2;
        /// The finite-sample precondition on `n` is not met.
        const SMALL_SAMPLE = 1 << 3;
        /// The DP-SGD bound fell back to the initial distance.
        const DEGENERATE_DISTANCE = 1 << 4;
        /// The gradient variance at the optimum exceeds the DP-SGD noise.
        const VARIANCE_ASSUMPTION = 1 << 5;
    }
}

impl fmt::Display for Flags {
    /// `|`-separated lower-case names, empty when no flag is set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter_names().map(|(n, _)| n.to_ascii_lowercase()).collect();
        f.write_str(&names.join("|"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_joins_names() {
        assert_eq!(Flags::empty().to_string(), "");
        assert_eq!((Flags::EMPTY_GROUP | Flags::INFINITE).to_string(), "empty_group|infinite");
    }
}
