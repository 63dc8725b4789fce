//! Verification of thread definition programs with fresh names, thread
//! creation and name-passing rendezvous.
//!
//! Programs are compiled into multiset rewriting rules with order
//! constraints over rational-valued names, then checked by symbolic
//! backward reachability.

pub mod error;
pub mod interp;
mod lex;
pub mod monadic;
pub mod msr;
pub mod nc;
pub mod symbolic;
pub mod tdl2msr;
pub mod tdl;
pub mod twocm;
pub mod value;

pub use error::ParseError;
pub use value::Value;
