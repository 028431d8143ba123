use std::collections::HashSet;
use std::fmt::Write as _;

use super::{Element, ElementKind, Netlist, NetlistError, GROUND};

/// Parses a value with an optional SI suffix (`f p n u m k meg g t`, any case).
pub fn parse_value(token: &str) -> Option<f64> {
    let lower = token.to_ascii_lowercase();
    let split = lower
        .char_indices()
        .find(|&(i, ch)| ch.is_ascii_alphabetic() && !(ch == 'e' && is_exponent(&lower[i..])))
        .map(|(i, _)| i)
        .unwrap_or(lower.len());
    let (num, suffix) = lower.split_at(split);
    let base: f64 = num.parse().ok()?;
    let scale = match suffix {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "meg" => 1e6,
        "g" => 1e9,
        "t" => 1e12,
        _ => return None,
    };
    let v = base * scale;
    v.is_finite().then_some(v)
}

fn is_exponent(rest: &str) -> bool {
    let mut chars = rest.chars().skip(1);
    match chars.next() {
        Some('+') | Some('-') => chars.next().is_some_and(|c| c.is_ascii_digit()),
        Some(c) => c.is_ascii_digit(),
        None => false,
    }
}

/// Parses the line-oriented RC netlist grammar.
///
/// ```text
/// * comment
/// R<id> <n1> <n2> <value>
/// C<id> <n1> <n2> <value>
/// .ports <n1> <n2> ...
/// .end
/// ```
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    let mut elements = Vec::new();
    let mut ports: Option<Vec<String>> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let head = toks[0];
        if let Some(directive) = head.strip_prefix('.') {
            match directive.to_ascii_lowercase().as_str() {
                "end" => break,
                "ports" => {
                    if ports.is_some() {
                        return Err(syntax(line_no, "duplicate .ports directive"));
                    }
                    if toks.len() < 2 {
                        return Err(syntax(line_no, ".ports needs at least one node"));
                    }
                    let mut seen = HashSet::new();
                    for t in &toks[1..] {
                        if *t == GROUND {
                            return Err(syntax(line_no, "ground cannot be a port"));
                        }
                        if !seen.insert(*t) {
                            return Err(syntax(line_no, &format!("port {t} listed twice")));
                        }
                    }
                    ports = Some(toks[1..].iter().map(|s| s.to_string()).collect());
                }
                other => return Err(syntax(line_no, &format!("unknown directive .{other}"))),
            }
            continue;
        }
        let kind = match head.chars().next().map(|c| c.to_ascii_uppercase()) {
            Some('R') => ElementKind::Resistor,
            Some('C') => ElementKind::Capacitor,
            _ => return Err(syntax(line_no, &format!("unknown card {head}"))),
        };
        if toks.len() != 4 {
            return Err(syntax(line_no, "expected <name> <node> <node> <value>"));
        }
        let value = parse_value(toks[3])
            .ok_or_else(|| syntax(line_no, &format!("bad value {}", toks[3])))?;
        if value <= 0.0 {
            return Err(NetlistError::NonpositiveValue {
                line: line_no,
                value,
            });
        }
        elements.push(Element {
            name: head.to_string(),
            kind,
            a: toks[1].to_string(),
            b: toks[2].to_string(),
            value,
        });
    }
    let ports = ports.ok_or_else(|| syntax(last_line + 1, "missing .ports directive"))?;
    if elements.is_empty() {
        return Err(syntax(last_line + 1, "netlist has no elements"));
    }
    let nodes: HashSet<&str> = elements
        .iter()
        .flat_map(|e| [e.a.as_str(), e.b.as_str()])
        .collect();
    if let Some(missing) = ports.iter().find(|p| !nodes.contains(p.as_str())) {
        return Err(NetlistError::UnknownNodeInPorts(missing.clone()));
    }
    Ok(Netlist { elements, ports })
}

fn syntax(line: usize, reason: &str) -> NetlistError {
    NetlistError::Syntax {
        line,
        reason: reason.to_string(),
    }
}

/// Renders a netlist in the grammar accepted by [`parse_netlist`]. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_netlist(nl: &Netlist) -> String {
    let mut out = String::new();
    for e in &nl.elements {
        let _ = writeln!(out, "{} {} {} {}", e.name, e.a, e.b, e.value);
    }
    let _ = writeln!(out, ".ports {}", nl.ports.join(" "));
    out.push_str(".end\n");
    out
}
