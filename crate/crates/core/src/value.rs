//! Rational values shared by ground configurations and name valuations.

use num_rational::Rational64;

/// A name interpreted as a rational number.
pub type Value = Rational64;

pub fn int(v: i64) -> Value {
    Value::from_integer(v)
}

/// Parses `3`, `-2` or `1/2`.
pub fn parse_value(text: &str) -> Option<Value> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            Some(Value::new(n, d))
        }
        None => text.parse::<i64>().ok().map(Value::from_integer),
    }
}

/// Midpoint of two values.
pub fn midpoint(a: Value, b: Value) -> Value {
    (a + b) / Value::from_integer(2)
}

/// Maps the distinct values of a configuration onto canonical representatives
/// that preserve order and keep every anchor fixed.
///
/// Values strictly between two consecutive anchors are spread evenly inside
/// that interval, values above the largest anchor become successive integers,
/// values below the smallest anchor become successive integers downwards.
pub fn canonical_relabel(values: &[Value], anchors: &[Value]) -> Vec<(Value, Value)> {
    let mut vals: Vec<Value> = values.to_vec();
    vals.sort();
    vals.dedup();
    let mut anchors: Vec<Value> = anchors.to_vec();
    anchors.sort();
    anchors.dedup();

    let mut out = Vec::with_capacity(vals.len());
    // bucket index: 0 = below first anchor, i = between anchors[i-1] and anchors[i],
    // anchors.len() = above the last anchor
    let mut i = 0;
    while i < vals.len() {
        let v = vals[i];
        if anchors.binary_search(&v).is_ok() {
            out.push((v, v));
            i += 1;
            continue;
        }
        let bucket = anchors.partition_point(|a| *a < v);
        let mut j = i;
        while j < vals.len()
            && anchors.binary_search(&vals[j]).is_err()
            && anchors.partition_point(|a| *a < vals[j]) == bucket
        {
            j += 1;
        }
        let group = &vals[i..j];
        let m = group.len() as i64;
        for (k, &old) in group.iter().enumerate() {
            let k = k as i64 + 1;
            let new = if anchors.is_empty() {
                Value::from_integer(k)
            } else if bucket == anchors.len() {
                anchors[bucket - 1] + Value::from_integer(k)
            } else if bucket == 0 {
                anchors[0] - Value::from_integer(m + 1 - k)
            } else {
                let lo = anchors[bucket - 1];
                let hi = anchors[bucket];
                lo + (hi - lo) * Value::new(k, m + 1)
            };
            out.push((old, new));
        }
        i = j;
    }
    out
}
