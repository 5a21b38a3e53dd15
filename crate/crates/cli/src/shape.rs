//! Text form of [`ShapeSpec`] for the `cap` subcommand.
//!
//! ```text
//! point:0,0   ball:0,0:0.25   segment:-0.25,0:0.25,0
//! box:-0.1,-0.1:0.1,0.1       cantor:3     a;b   (union)
//! ```

use minkcap_core::capacity::discretize_shape;
use minkcap_core::{Error, Result, ShapeSpec};

fn coords(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("bad shape coordinate `{c}`: {e}")))
        })
        .collect()
}

fn one(s: &str) -> Result<ShapeSpec> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let bad = || Error::InvalidParameter(format!("cannot parse shape `{s}`"));
    Ok(match parts.as_slice() {
        ["point", c] => ShapeSpec::Point(coords(c)?),
        ["ball", c, r] => ShapeSpec::Ball {
            center: coords(c)?,
            radius: r.trim().parse().map_err(|_| bad())?,
        },
        ["segment", a, b] => ShapeSpec::Segment {
            from: coords(a)?,
            to: coords(b)?,
        },
        ["box", a, b] => ShapeSpec::AxisBox {
            lo: coords(a)?,
            hi: coords(b)?,
        },
        ["cantor", depth] => ShapeSpec::Cantor {
            depth: depth.trim().parse().map_err(|_| bad())?,
        },
        _ => return Err(bad()),
    })
}

pub fn parse_shape(s: &str) -> Result<ShapeSpec> {
    let items: Vec<ShapeSpec> = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(one)
        .collect::<Result<_>>()?;
    let shape = match items.len() {
        0 => return Err(Error::InvalidParameter("empty shape".into())),
        1 => items.into_iter().next().expect("one item"),
        _ => ShapeSpec::Union(items),
    };
    // level 0 is cheap and runs the full validation
    discretize_shape(&shape, 0)?;
    Ok(shape)
}
