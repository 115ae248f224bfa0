//! Network files: the NNet text format and an equivalent JSON layout.
//!
//! NNet layout after any `//` comment lines:
//!
//! ```text
//! numLayers,inputSize,outputSize,maxLayerSize
//! size_0,size_1,...,size_numLayers
//! 0                      (legacy flag, ignored)
//! input mins
//! input maxes
//! means  (inputSize + 1 values, the last for outputs)
//! ranges (inputSize + 1 values, the last for outputs)
//! per layer: one line per weight row, then one line per bias entry
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::network::{Activation, AffineLayer, FeedForwardNetwork};

/// Input bounds and normalization constants shipped with a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NNetMetadata {
    pub input_mins: Vec<f64>,
    pub input_maxes: Vec<f64>,
    /// `input_dim + 1` entries; the last applies to every output.
    pub means: Vec<f64>,
    /// `input_dim + 1` entries; the last applies to every output.
    pub ranges: Vec<f64>,
    pub layer_sizes: Vec<usize>,
}

impl NNetMetadata {
    /// Metadata that makes normalization the identity.
    pub fn neutral(net: &FeedForwardNetwork<f64>) -> Self {
        let n = net.input_dim();
        Self {
            input_mins: vec![f64::MIN; n],
            input_maxes: vec![f64::MAX; n],
            means: vec![0.0; n + 1],
            ranges: vec![1.0; n + 1],
            layer_sizes: layer_sizes(net),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_mins.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.input_mins.len();
        check_dim("input maxes", n, self.input_maxes.len())?;
        check_dim("means", n + 1, self.means.len())?;
        check_dim("ranges", n + 1, self.ranges.len())?;
        if let Some(&first) = self.layer_sizes.first() {
            check_dim("metadata input size", first, n)?;
        }
        if self.ranges.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::invalid("normalization ranges must be positive and finite"));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("normalization means must be finite"));
        }
        if self.input_mins.iter().zip(&self.input_maxes).any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::invalid("input mins must not exceed input maxes"));
        }
        Ok(())
    }

    fn check_network(&self, net: &FeedForwardNetwork<f64>) -> Result<()> {
        self.validate()?;
        check_dim("metadata input size", net.input_dim(), self.input_dim())?;
        if !self.layer_sizes.is_empty() && self.layer_sizes != layer_sizes(net) {
            return Err(Error::invalid(format!(
                "metadata layer sizes {:?} do not match the network {:?}",
                self.layer_sizes,
                layer_sizes(net)
            )));
        }
        Ok(())
    }
}

fn layer_sizes(net: &FeedForwardNetwork<f64>) -> Vec<usize> {
    std::iter::once(net.input_dim())
        .chain(net.layers().iter().map(|l| l.output_dim()))
        .collect()
}

/// Clamps each coordinate to the input bounds, then maps it to `(x − mean) / range`.
pub fn normalize_input(meta: &NNetMetadata, x: &[f64]) -> Result<Vec<f64>> {
    check_dim("normalize input", meta.input_dim(), x.len())?;
    Ok((0..x.len())
        .map(|i| {
            let v = x[i].max(meta.input_mins[i]).min(meta.input_maxes[i]);
            (v - meta.means[i]) / meta.ranges[i]
        })
        .collect())
}

/// Maps a network output back to `y·range + mean`.
pub fn denormalize_output(meta: &NNetMetadata, y: &[f64]) -> Vec<f64> {
    let n = meta.input_dim();
    let (mean, range) = (meta.means[n], meta.ranges[n]);
    y.iter().map(|&v| v * range + mean).collect()
}

/// The network in raw coordinates: input normalization folded into the first
/// layer and output denormalization folded into the last. Clamping is not part
/// of the result; callers restrict inputs to the bounds instead.
pub fn fold_normalization(net: &FeedForwardNetwork<f64>, meta: &NNetMetadata) -> Result<FeedForwardNetwork<f64>> {
    meta.check_network(net)?;
    let n = net.input_dim();
    let mut layers = net.layers().to_vec();

    let first = &layers[0];
    let scale: Vec<f64> = meta.ranges[..n].iter().map(|r| 1.0 / r).collect();
    let mut weights = first.weights.clone();
    let mut bias = first.bias.clone();
    for i in 0..weights.nrows() {
        let row = weights.row_mut(i);
        let mut shift = 0.0;
        for j in 0..n {
            row[j] *= scale[j];
            shift += row[j] * meta.means[j];
        }
        bias[i] -= shift;
    }
    layers[0] = AffineLayer::new(weights, bias, first.activation)?;

    let last_index = layers.len() - 1;
    let last = &layers[last_index];
    let (mean, range) = (meta.means[n], meta.ranges[n]);
    let weights = last.weights.scale(range);
    let bias = last.bias.iter().map(|&b| b * range + mean).collect();
    layers[last_index] = AffineLayer::new(weights, bias, last.activation)?;
    FeedForwardNetwork::new(layers)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    /// Next non-comment, non-blank line as `(line number, tokens)`.
    fn next_record(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if t.is_empty() || t.starts_with("//") {
                continue;
            }
            let tokens = t.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            return Ok((i + 1, tokens));
        }
        Err(Error::Parse {
            line: 0,
            message: format!("unexpected end of file while reading {what}"),
        })
    }

    fn floats(&mut self, what: &str, count: usize) -> Result<Vec<f64>> {
        let (line, tokens) = self.next_record(what)?;
        if tokens.len() != count {
            return Err(Error::Parse {
                line,
                message: format!("{what}: expected {count} values, found {}", tokens.len()),
            });
        }
        tokens.iter().map(|t| parse_token(t, line, what)).collect()
    }

    fn integers(&mut self, what: &str) -> Result<(usize, Vec<usize>)> {
        let (line, tokens) = self.next_record(what)?;
        let values = tokens
            .iter()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    message: format!("{what}: expected a non-negative integer, found {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        Ok((line, values))
    }

    fn trailing(&mut self) -> Option<usize> {
        self.next_record("").ok().map(|(line, _)| line)
    }
}

fn parse_token(token: &str, line: usize, what: &str) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("{what}: {token:?} is not a finite number"),
        }),
    }
}

pub fn parse_nnet(text: &str) -> Result<(FeedForwardNetwork<f64>, NNetMetadata)> {
    let mut lines = Lines::new(text);
    let (line, header) = lines.integers("header")?;
    if header.len() != 4 {
        return Err(Error::Parse {
            line,
            message: format!("header: expected 4 values, found {}", header.len()),
        });
    }
    let (num_layers, input_size, output_size) = (header[0], header[1], header[2]);
    if num_layers == 0 {
        return Err(Error::Parse {
            line,
            message: "a network needs at least one layer".into(),
        });
    }
    let (line, sizes) = lines.integers("layer sizes")?;
    if sizes.len() != num_layers + 1 {
        return Err(Error::Parse {
            line,
            message: format!("layer sizes: expected {} values, found {}", num_layers + 1, sizes.len()),
        });
    }
    if sizes[0] != input_size || sizes[num_layers] != output_size || sizes.contains(&0) {
        return Err(Error::Parse {
            line,
            message: format!("layer sizes {sizes:?} disagree with input size {input_size} and output size {output_size}"),
        });
    }
    lines.next_record("legacy flag")?;
    let input_mins = lines.floats("input mins", input_size)?;
    let input_maxes = lines.floats("input maxes", input_size)?;
    let means = lines.floats("means", input_size + 1)?;
    let ranges = lines.floats("ranges", input_size + 1)?;

    let mut layers = Vec::with_capacity(num_layers);
    for k in 0..num_layers {
        let (fan_in, fan_out) = (sizes[k], sizes[k + 1]);
        let mut data = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_out {
            data.extend(lines.floats(&format!("layer {k} weights"), fan_in)?);
        }
        let mut bias = Vec::with_capacity(fan_out);
        for _ in 0..fan_out {
            bias.extend(lines.floats(&format!("layer {k} bias"), 1)?);
        }
        let activation = if k + 1 == num_layers {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(AffineLayer::new(Matrix::from_row_major(fan_out, fan_in, data)?, bias, activation)?);
    }
    if let Some(line) = lines.trailing() {
        return Err(Error::Parse {
            line,
            message: "unexpected data after the last layer".into(),
        });
    }
    let meta = NNetMetadata {
        input_mins,
        input_maxes,
        means,
        ranges,
        layer_sizes: sizes,
    };
    meta.validate().map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    Ok((FeedForwardNetwork::new(layers)?, meta))
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for v in values {
        // `{:?}` is the shortest representation that parses back to the same bits.
        out.push_str(&format!("{v:?},"));
    }
    out.push('\n');
}

pub fn write_nnet(net: &FeedForwardNetwork<f64>, meta: &NNetMetadata) -> Result<String> {
    meta.check_network(net)?;
    let sizes = layer_sizes(net);
    let mut out = String::from("// zonopt network\n");
    out.push_str(&format!(
        "{},{},{},{},\n",
        net.layers().len(),
        net.input_dim(),
        net.output_dim(),
        sizes.iter().max().copied().unwrap_or(0)
    ));
    out.push_str(&sizes.iter().map(|s| format!("{s},")).collect::<String>());
    out.push_str("\n0,\n");
    push_row(&mut out, meta.input_mins.iter().copied());
    push_row(&mut out, meta.input_maxes.iter().copied());
    push_row(&mut out, meta.means.iter().copied());
    push_row(&mut out, meta.ranges.iter().copied());
    for layer in net.layers() {
        for i in 0..layer.weights.nrows() {
            push_row(&mut out, layer.weights.row(i).iter().copied());
        }
        for &b in &layer.bias {
            push_row(&mut out, [b]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

/// JSON network: dense layers plus optional NNet-style metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonNetwork {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<NNetMetadata>,
    layers: Vec<JsonLayer>,
}

pub fn parse_json_network(text: &str) -> Result<(FeedForwardNetwork<f64>, Option<NNetMetadata>)> {
    let doc: JsonNetwork = serde_json::from_str(text)?;
    let mut params = Vec::with_capacity(doc.layers.len());
    for (k, layer) in doc.layers.into_iter().enumerate() {
        let cols = layer.weights.first().map_or(0, Vec::len);
        let weights = Matrix::from_rows(&layer.weights, cols)
            .map_err(|e| Error::invalid(format!("layer {k} weights: {e}")))?;
        params.push((weights, layer.bias));
    }
    let net = FeedForwardNetwork::from_parameters(params)?;
    if let Some(meta) = &doc.metadata {
        meta.check_network(&net)?;
    }
    Ok((net, doc.metadata))
}

pub fn write_json_network(net: &FeedForwardNetwork<f64>, meta: Option<&NNetMetadata>) -> Result<String> {
    if let Some(meta) = meta {
        meta.check_network(net)?;
    }
    let doc = JsonNetwork {
        metadata: meta.cloned(),
        layers: net
            .layers()
            .iter()
            .map(|l| JsonLayer {
                weights: l.weights.to_rows(),
                bias: l.bias.clone(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Loads `.json` files as JSON networks and anything else as NNet.
pub fn load_network(path: &Path) -> Result<(FeedForwardNetwork<f64>, Option<NNetMetadata>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Query(format!("cannot read network {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        parse_json_network(&text)
    } else {
        parse_nnet(&text).map(|(n, m)| (n, Some(m)))
    };
    parsed.map_err(|e| e.with_context(format!("loading {}", path.display())))
}
