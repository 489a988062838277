//! Dialogue systems in propositional executable logic.
//!
//! A *system* gives each of two agents a set of condition/action rules over
//! ground literals. Agents take turns: the agent to move fires any rule whose
//! condition is classically entailed by its private state together with the
//! shared public state, and applies a minimal set of add/delete actions to the
//! next private and public states. The set of dialogues reachable from an
//! initial state is compiled into an explicit finite state machine whose
//! letters are action-set pairs.
//!
//! On top of the machine sit two analyses: the public state of a leaf is read
//! as an abstract argument graph (arguments `a(x)`, attacks `a(u,v)`) and
//! scored by membership of a goal argument in the grounded extension, and the
//! machine is unrolled into a game tree valued by minimax.
//!
//! The crate also ships a small text format for systems ([`dsl`]), an
//! independent bounded execution enumerator used as a cross-check for the
//! machine builder ([`exec`]), and a benchmark harness over random instances
//! ([`bench`]).

pub mod af;
pub mod bench;
pub mod dsl;
pub mod exec;
pub mod fsm;
pub mod game;
pub mod model;
