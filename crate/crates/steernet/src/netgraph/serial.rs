use super::graph::{ActKind, GraphError, LayerKind, LayerNode, NetworkGraph, ParamTensor};
use crate::numerics::Tensor;
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SerialError {
    Parse { line: usize, msg: String },
    UnknownKind { kind: String },
    ChecksumMismatch,
    OffsetOverlap { owner: String, name: String },
    BlobLength { expected: usize, got: usize },
    Graph(GraphError),
}

impl fmt::Display for SerialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line, msg } => write!(f, "descriptor line {line}: {msg}"),
            Self::UnknownKind { kind } => write!(f, "unknown node kind '{kind}'"),
            Self::ChecksumMismatch => write!(f, "weight blob checksum mismatch"),
            Self::OffsetOverlap { owner, name } => {
                write!(f, "param {owner}.{name} overlaps another param's bytes")
            }
            Self::BlobLength { expected, got } => {
                write!(f, "weight blob is {got} bytes, descriptor says {expected}")
            }
            Self::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SerialError {}

impl From<GraphError> for SerialError {
    fn from(e: GraphError) -> Self {
        SerialError::Graph(e)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn kind_line(kind: &LayerKind) -> String {
    match kind {
        LayerKind::Conv2d {
            kh,
            kw,
            stride,
            padding,
            groups,
            in_channels,
            out_channels,
            bias,
        } => format!(
            "conv kh={kh} kw={kw} stride={stride} pad={padding} groups={groups} in={in_channels} out={out_channels} bias={}",
            *bias as u8
        ),
        LayerKind::PointwiseConv {
            in_channels,
            out_channels,
            bias,
        } => format!("pointwise in={in_channels} out={out_channels} bias={}", *bias as u8),
        LayerKind::BatchNorm { channels } => format!("batchnorm c={channels}"),
        LayerKind::Linear {
            in_features,
            out_features,
            bias,
        } => format!("linear in={in_features} out={out_features} bias={}", *bias as u8),
        LayerKind::Activation { act } => format!("activation act={}", act.name()),
        LayerKind::Add => "add".to_string(),
        LayerKind::Concat => "concat".to_string(),
        LayerKind::BilinearUpsample { factor } => format!("upsample factor={factor}"),
        LayerKind::GlobalAvgPool => "gap".to_string(),
        LayerKind::ScalarFusion { count } => format!("fusion count={count}"),
    }
}

/// Write a graph as a text descriptor plus a little-endian `f32` blob.
/// The descriptor carries structure and per-param metadata (shape, flags,
/// byte offset); weight mutation only rewrites the blob.
pub fn serialize(net: &NetworkGraph) -> (String, Vec<u8>) {
    let mut text = String::new();
    text.push_str("nfg 1\n");
    for c in &net.comments {
        text.push_str(&format!("# {c}\n"));
    }
    for (name, ch) in &net.inputs {
        text.push_str(&format!("input {name} {ch}\n"));
    }
    for out in &net.outputs {
        text.push_str(&format!("output {out}\n"));
    }
    for node in &net.nodes {
        text.push_str(&format!(
            "node {} {} from={}\n",
            node.id,
            kind_line(&node.kind),
            node.inputs.join(",")
        ));
    }
    let mut blob: Vec<u8> = Vec::new();
    for p in &net.params {
        let offset = blob.len();
        for &v in p.tensor.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        let shape = p
            .tensor
            .shape()
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        text.push_str(&format!(
            "param {} {} shape={} fixed={} spatial={} buffer={} offset={}\n",
            p.owner, p.name, shape, p.fixed as u8, p.spatial as u8, p.buffer as u8, offset
        ));
    }
    text.push_str(&format!(
        "blob bytes={} fnv1a64={:016x}\n",
        blob.len(),
        fnv1a64(&blob)
    ));
    (text, blob)
}

fn kv(tokens: &[&str]) -> HashMap<String, String> {
    tokens
        .iter()
        .filter_map(|t| t.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn need(map: &HashMap<String, String>, key: &str, line: usize) -> Result<usize, SerialError> {
    map.get(key)
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| SerialError::Parse {
            line,
            msg: format!("missing or invalid '{key}='"),
        })
}

fn parse_kind(tokens: &[&str], line: usize) -> Result<LayerKind, SerialError> {
    let attrs = kv(&tokens[1..]);
    let kind = tokens[0];
    Ok(match kind {
        "conv" => LayerKind::Conv2d {
            kh: need(&attrs, "kh", line)?,
            kw: need(&attrs, "kw", line)?,
            stride: need(&attrs, "stride", line)?,
            padding: need(&attrs, "pad", line)?,
            groups: need(&attrs, "groups", line)?,
            in_channels: need(&attrs, "in", line)?,
            out_channels: need(&attrs, "out", line)?,
            bias: need(&attrs, "bias", line)? != 0,
        },
        "pointwise" => LayerKind::PointwiseConv {
            in_channels: need(&attrs, "in", line)?,
            out_channels: need(&attrs, "out", line)?,
            bias: need(&attrs, "bias", line)? != 0,
        },
        "batchnorm" => LayerKind::BatchNorm {
            channels: need(&attrs, "c", line)?,
        },
        "linear" => LayerKind::Linear {
            in_features: need(&attrs, "in", line)?,
            out_features: need(&attrs, "out", line)?,
            bias: need(&attrs, "bias", line)? != 0,
        },
        "activation" => {
            let act = match attrs.get("act").map(|s| s.as_str()) {
                Some("celu") => ActKind::Celu,
                Some("relu") => ActKind::Relu,
                Some("sigmoid") => ActKind::Sigmoid,
                other => {
                    return Err(SerialError::Parse {
                        line,
                        msg: format!("unknown activation {other:?}"),
                    })
                }
            };
            LayerKind::Activation { act }
        }
        "add" => LayerKind::Add,
        "concat" => LayerKind::Concat,
        "upsample" => LayerKind::BilinearUpsample {
            factor: need(&attrs, "factor", line)?,
        },
        "gap" => LayerKind::GlobalAvgPool,
        "fusion" => LayerKind::ScalarFusion {
            count: need(&attrs, "count", line)?,
        },
        other => {
            return Err(SerialError::UnknownKind {
                kind: other.to_string(),
            })
        }
    })
}

/// Parse a descriptor and its weight blob back into a graph. Verifies the
/// blob checksum, byte-range exclusivity, and full graph validity.
pub fn deserialize(descriptor: &str, blob: &[u8]) -> Result<NetworkGraph, SerialError> {
    let mut net = NetworkGraph::new(vec![], vec![]);
    let mut declared_bytes: Option<(usize, u64)> = None;
    let mut spans: Vec<(usize, usize, String, String)> = Vec::new();

    for (line_no, raw) in descriptor.lines().enumerate() {
        let line = line_no + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            net.comments.push(comment.trim().to_string());
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match tokens[0] {
            "nfg" => {
                if tokens.get(1) != Some(&"1") {
                    return Err(SerialError::Parse {
                        line,
                        msg: format!("unsupported format version {:?}", tokens.get(1)),
                    });
                }
            }
            "input" => {
                if tokens.len() != 3 {
                    return Err(SerialError::Parse {
                        line,
                        msg: "input expects: input <name> <channels>".into(),
                    });
                }
                let ch = tokens[2].parse().map_err(|_| SerialError::Parse {
                    line,
                    msg: "bad channel count".into(),
                })?;
                net.inputs.push((tokens[1].to_string(), ch));
            }
            "output" => {
                if tokens.len() != 2 {
                    return Err(SerialError::Parse {
                        line,
                        msg: "output expects: output <node>".into(),
                    });
                }
                net.outputs.push(tokens[1].to_string());
            }
            "node" => {
                if tokens.len() < 3 {
                    return Err(SerialError::Parse {
                        line,
                        msg: "node expects: node <id> <kind> ... from=a,b".into(),
                    });
                }
                let id = tokens[1].to_string();
                let from = tokens
                    .iter()
                    .find_map(|t| t.strip_prefix("from="))
                    .ok_or_else(|| SerialError::Parse {
                        line,
                        msg: "node missing from=".into(),
                    })?;
                let kind_tokens: Vec<&str> = tokens[2..]
                    .iter()
                    .filter(|t| !t.starts_with("from="))
                    .copied()
                    .collect();
                let kind = parse_kind(&kind_tokens, line)?;
                net.nodes.push(LayerNode {
                    id,
                    kind,
                    inputs: from.split(',').map(|s| s.to_string()).collect(),
                });
            }
            "param" => {
                if tokens.len() < 4 {
                    return Err(SerialError::Parse {
                        line,
                        msg: "param expects: param <owner> <name> k=v ...".into(),
                    });
                }
                let owner = tokens[1].to_string();
                let name = tokens[2].to_string();
                let attrs = kv(&tokens[3..]);
                let shape: Vec<usize> = attrs
                    .get("shape")
                    .ok_or_else(|| SerialError::Parse {
                        line,
                        msg: "param missing shape=".into(),
                    })?
                    .split(',')
                    .map(|s| s.parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| SerialError::Parse {
                        line,
                        msg: "bad shape".into(),
                    })?;
                let offset = need(&attrs, "offset", line)?;
                let numel: usize = shape.iter().product();
                let nbytes = numel * 4;
                if offset + nbytes > blob.len() {
                    return Err(SerialError::BlobLength {
                        expected: offset + nbytes,
                        got: blob.len(),
                    });
                }
                let mut data = Vec::with_capacity(numel);
                for i in 0..numel {
                    let at = offset + i * 4;
                    data.push(f32::from_le_bytes([
                        blob[at],
                        blob[at + 1],
                        blob[at + 2],
                        blob[at + 3],
                    ]));
                }
                spans.push((offset, nbytes, owner.clone(), name.clone()));
                net.params.push(ParamTensor {
                    owner,
                    name,
                    tensor: Tensor::from_vec(&shape, data),
                    fixed: need(&attrs, "fixed", line)? != 0,
                    spatial: need(&attrs, "spatial", line)? != 0,
                    buffer: need(&attrs, "buffer", line)? != 0,
                });
            }
            "blob" => {
                let attrs = kv(&tokens[1..]);
                let bytes = need(&attrs, "bytes", line)?;
                let sum = attrs
                    .get("fnv1a64")
                    .and_then(|v| u64::from_str_radix(v, 16).ok())
                    .ok_or_else(|| SerialError::Parse {
                        line,
                        msg: "blob missing fnv1a64=".into(),
                    })?;
                declared_bytes = Some((bytes, sum));
            }
            other => {
                return Err(SerialError::Parse {
                    line,
                    msg: format!("unknown directive '{other}'"),
                })
            }
        }
    }

    let (bytes, sum) = declared_bytes.ok_or(SerialError::Parse {
        line: 0,
        msg: "missing blob line".into(),
    })?;
    if bytes != blob.len() {
        return Err(SerialError::BlobLength {
            expected: bytes,
            got: blob.len(),
        });
    }
    if fnv1a64(blob) != sum {
        return Err(SerialError::ChecksumMismatch);
    }
    spans.sort_by_key(|s| s.0);
    for w in spans.windows(2) {
        let (off_a, len_a, ..) = w[0];
        let (off_b, _, ref owner, ref name) = w[1];
        if off_b < off_a + len_a {
            return Err(SerialError::OffsetOverlap {
                owner: owner.clone(),
                name: name.clone(),
            });
        }
    }
    net.validate()?;
    Ok(net)
}
