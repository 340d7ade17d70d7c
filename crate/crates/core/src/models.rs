//! Input files of the two worked example systems on the simple cubic lattice
//! (a = 3.5): a phase-separating nearest-neighbour model and a checkerboard
//! ordering model with an additional second-neighbour axis pair.

/// The four input files that define a cluster-expansion system.
#[derive(Debug, Clone, Copy)]
pub struct ModelFiles {
    pub lattice: &'static str,
    pub clusters: &'static str,
    pub eci: &'static str,
    pub ground_states: &'static str,
}

pub const SC_LATTICE: &str = "3.5 3.5 3.5 90 90 90\n1. 0 0\n0 1 0\n0 0 1\n0 0 0 Ni, Al\n";

/// Primitive fcc cell, a = 3.52.
pub const FCC_LAT: &str = "3.52 3.52 3.52 90 90 90\n0   0.5 0.5\n0.5 0   0.5\n0.5 0.5 0\n0.000000 0.000000 0.000000 Ni,Al\n";

/// Nearest-neighbour model that phase separates; both pure ground states sit at -3 per atom.
pub const SEPARATION: ModelFiles = ModelFiles {
    lattice: SC_LATTICE,
    clusters: "1
0.000000
0

1
0.000000
1
1.000000 1.000000 1.000000

6
3.5
2
1.000000 1.000000 1.000000
1.000 1.0000 0.0000
",
    eci: "0.\n0.\n-1\n",
    ground_states: "3.500000 0.000000 0.000000
0.000000 3.500000 0.000000
0.000000 0.000000 3.500000
1. 0 0
0 1. 0
0 0 1.
1.000000 1.000000 1.000000 Ni
end

3.500000 0.000000 0.000000
0.000000 3.500000 0.000000
0.000000 0.000000 3.500000
1. 0 0
0 1. 0
0 0 1.
1.000000 1.000000 1.000000 Al
end
",
};

/// Ordering nearest-neighbour model with a -0.2 axis pair at distance 2a. Declared
/// ground states are pure Ni, NaCl-type NiAl and pure Al.
pub const CHECKERBOARD: ModelFiles = ModelFiles {
    lattice: SC_LATTICE,
    clusters: "1
0.000000
0

1
0.000000
1
1.000000 1.000000 1.000000

3
3.5
2
1.000000 1.000000 1.000000
1.000 1.0000 0.0000

3
7.00000
2
1.00000 1.00000 1.00000
1.00000 1.00000 -1.00000

",
    eci: "0.\n0.\n1\n-0.2\n",
    ground_states: "3.500000 0.000000 0.000000
0.000000 3.500000 0.000000
0.000000 0.000000 3.500000
1. 0 0
0 1. 0
0 0 1.
1.000000 1.000000 1.000000 Ni
end

3.5000 3.5000 0
3.5000 0 3.5000
0 3.5000 3.5000
1. 0. 0.
0. 1. 0.
0. 0. 1
0. 0. 0. Al
0.5 0.5 0.5 Ni
end

3.500000 0.000000 0.000000
0.000000 3.500000 0.000000
0.000000 0.000000 3.500000
1. 0 0
0 1. 0
0 0 1.
1.000000 1.000000 1.000000 Al
end
",
};
