//! Doctest anchors for the guide: every fenced Rust block in the book
//! chapters compiles and runs under `cargo test --doc`, keeping the guide in
//! sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
mod getting_started {}

#[doc = include_str!("../../../book/src/geometry.md")]
mod geometry {}

#[doc = include_str!("../../../book/src/sampling-and-streams.md")]
mod sampling_and_streams {}

#[doc = include_str!("../../../book/src/facet-process.md")]
mod facet_process {}

#[doc = include_str!("../../../book/src/line-crossings.md")]
mod line_crossings {}

#[doc = include_str!("../../../book/src/typical-cells.md")]
mod typical_cells {}

#[doc = include_str!("../../../book/src/closed-forms.md")]
mod closed_forms {}

#[doc = include_str!("../../../book/src/monte-carlo.md")]
mod monte_carlo {}

#[doc = include_str!("../../../book/src/panel-swaps.md")]
mod panel_swaps {}

#[doc = include_str!("../../../book/src/command-line.md")]
mod command_line {}
