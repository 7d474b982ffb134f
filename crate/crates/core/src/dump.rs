//! Line-oriented text rendering of schedules.
//!
//! One transmission per line: a phase tag (`V` virtual, `C` coded caching,
//! `U` unicast), the origin indices, a `|`, then one `(user,packet,q,{nulling})`
//! group per term. Phantom users render as `~n`. Lines starting with `#` are
//! comments.

use std::fmt::{self, Display, Write};

pub(crate) fn write_term<U: Display, N: Display>(
    out: &mut impl Write,
    user: &U,
    packet: u32,
    q: u32,
    nulling: &[N],
) -> fmt::Result {
    write!(out, "({user},{packet},{q},{{")?;
    for (i, n) in nulling.iter().enumerate() {
        if i > 0 {
            out.write_char(',')?;
        }
        write!(out, "{n}")?;
    }
    out.write_str("})")
}
