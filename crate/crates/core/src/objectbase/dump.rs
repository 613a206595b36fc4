//! Line-oriented text dump of an [`ObjectGraph`].
//!
//! ```text
//! objectbase 1
//! header <num_classes> <num_objects> <num_refs> <num_ref_types> <seed>
//! c <class_id> <instance_size> <ref_slots> [<target_class>:<ref_type> ...]
//! o <object_id> <class_id> <size_bytes>
//! r <src_object> <dst_object> <ref_type>
//! ```
//!
//! Class lines come first in id order, then object lines in id order, then
//! reference lines grouped by source in slot order. Blank lines and lines
//! starting with `#` are ignored on load.

use std::io::{BufRead, BufWriter, Write};

use super::{ClassDescriptor, ClassRef, ObjectGraph, ObjectRecord, ObjectRef};
use crate::error::{Error, Result};

const MAGIC: &str = "objectbase 1";

pub fn write_graph<W: Write>(graph: &ObjectGraph, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{MAGIC}")?;
    writeln!(
        w,
        "header {} {} {} {} {}",
        graph.classes().len(),
        graph.len(),
        graph.num_refs(),
        graph.num_ref_types(),
        graph.seed()
    )?;
    for c in graph.classes() {
        write!(w, "c {} {} {}", c.class_id, c.instance_size, c.refs.len())?;
        for r in &c.refs {
            write!(w, " {}:{}", r.target_class, r.ref_type)?;
        }
        writeln!(w)?;
    }
    for (id, o) in graph.objects().iter().enumerate() {
        writeln!(w, "o {id} {} {}", o.class, o.size)?;
    }
    for id in 0..graph.len() as u32 {
        for r in graph.refs(id) {
            writeln!(w, "r {id} {} {}", r.target, r.ref_type)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn dump_graph(graph: &ObjectGraph) -> String {
    let mut buf = Vec::new();
    write_graph(graph, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("dump is ascii")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

pub fn read_graph<R: BufRead>(input: R) -> Result<ObjectGraph> {
    let mut header: Option<(usize, usize, usize, u32, u64)> = None;
    let mut saw_magic = false;
    let mut classes = Vec::new();
    let mut objects = Vec::new();
    let mut refs: Vec<Vec<ObjectRef>> = Vec::new();
    let mut ref_count = 0usize;

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_magic {
            if line != MAGIC {
                return Err(parse_err(lineno, format!("expected `{MAGIC}`")));
            }
            saw_magic = true;
            continue;
        }
        let mut toks = line.split_whitespace();
        let kind = toks.next().unwrap_or_default();
        match (kind, header) {
            ("header", None) => {
                let nc = num(lineno, toks.next(), "class count")?;
                let no = num(lineno, toks.next(), "object count")?;
                let nr = num(lineno, toks.next(), "reference count")?;
                let nt = num(lineno, toks.next(), "reference type count")?;
                let seed = num(lineno, toks.next(), "seed")?;
                header = Some((nc, no, nr, nt, seed));
                refs = vec![Vec::new(); no];
            }
            ("header", Some(_)) => return Err(parse_err(lineno, "duplicate header")),
            (_, None) => return Err(parse_err(lineno, "record before header")),
            ("c", Some(_)) => {
                let id: u32 = num(lineno, toks.next(), "class id")?;
                if id as usize != classes.len() {
                    return Err(parse_err(lineno, "class lines out of order"));
                }
                let instance_size = num(lineno, toks.next(), "instance size")?;
                let slots: usize = num(lineno, toks.next(), "slot count")?;
                let mut crefs = Vec::with_capacity(slots);
                for tok in toks.by_ref() {
                    let (t, ty) = tok
                        .split_once(':')
                        .ok_or_else(|| parse_err(lineno, format!("bad class ref `{tok}`")))?;
                    crefs.push(ClassRef {
                        target_class: num(lineno, Some(t), "target class")?,
                        ref_type: num(lineno, Some(ty), "reference type")?,
                    });
                }
                if crefs.len() != slots {
                    return Err(parse_err(lineno, "slot count does not match class refs"));
                }
                classes.push(ClassDescriptor {
                    class_id: id,
                    instance_size,
                    refs: crefs,
                });
            }
            ("o", Some(_)) => {
                let id: usize = num(lineno, toks.next(), "object id")?;
                if id != objects.len() {
                    return Err(parse_err(lineno, "object lines out of order"));
                }
                objects.push(ObjectRecord {
                    class: num(lineno, toks.next(), "class id")?,
                    size: num(lineno, toks.next(), "size")?,
                });
            }
            ("r", Some(_)) => {
                let src: usize = num(lineno, toks.next(), "source id")?;
                let target = num(lineno, toks.next(), "target id")?;
                let ref_type = num(lineno, toks.next(), "reference type")?;
                let slot = refs
                    .get_mut(src)
                    .ok_or_else(|| parse_err(lineno, format!("source {src} out of range")))?;
                slot.push(ObjectRef { target, ref_type });
                ref_count += 1;
            }
            (other, _) => return Err(parse_err(lineno, format!("unknown record `{other}`"))),
        }
        if toks.next().is_some() {
            return Err(parse_err(lineno, "trailing tokens"));
        }
    }

    let (nc, no, nr, nt, seed) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    if classes.len() != nc || objects.len() != no || ref_count != nr {
        return Err(parse_err(0, "record counts do not match header"));
    }
    ObjectGraph::from_parts(seed, nt, classes, objects, refs)
}

pub fn load_graph(text: &str) -> Result<ObjectGraph> {
    read_graph(text.as_bytes())
}
