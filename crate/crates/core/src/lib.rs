//! Instruction-driven navigation on 2D semantic occupancy maps.
//!
//! A natural-language instruction is grounded to map object ids, translated
//! into an LTL formula through a restricted code-generation loop, compiled to
//! a deterministic automaton over finite words, and solved with A* over the
//! product of the grid and the automaton.
//!
//! ```
//! use std::collections::BTreeMap;
//! use ltlnav::ltl::Formula;
//! use ltlnav::semmap::{Cell, CellClass, LabelGrid, SemanticGrid};
//! use ltlnav::pipeline::solve;
//!
//! let mut grid = SemanticGrid::new(6, 1, 0.5, vec![], CellClass::Free).unwrap();
//! let door = grid.intern_class("door");
//! grid.set(Cell::new(5, 0), CellClass::Object(door));
//! let labels = LabelGrid::build(&grid, &BTreeMap::from([("door".to_string(), 0.5)])).unwrap();
//! let f = Formula::parse_prefix("F door").unwrap();
//! let path = solve(&grid, &labels, &f, Cell::new(0, 0), 0.25, Default::default()).unwrap();
//! assert_eq!(path.cells.len(), 5);
//! ```

pub mod automaton;
pub mod codegen;
pub mod exec;
pub mod heuristic;
pub mod ltl;
pub mod pipeline;
pub mod planner;
pub mod render;
pub mod semmap;

pub use automaton::TaskAutomaton;
pub use exec::Execution;
pub use ltl::{Formula, Letter, Word};
pub use semmap::{Cell, CellClass, LabelGrid, SemanticGrid};
