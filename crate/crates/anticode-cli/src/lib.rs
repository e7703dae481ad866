//! Library side of the anticode CLI: the acceptance-suite runners, shared
//! by the `suite acceptance` subcommand and the integration tests.

pub mod criteria;
