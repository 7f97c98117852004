// SPDX-License-Identifier: Apache-2.0

//! Text formats and the command-line surface.

pub mod amp_expr;
pub mod commands;
pub mod format;
pub mod input;
pub mod machine_file;
