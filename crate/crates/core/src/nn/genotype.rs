use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard cap on trainable parameters of any realized model.
pub const PARAM_BUDGET: usize = 300_000;

pub const DEFAULT_INPUT_SIDE: usize = 64;

pub(crate) const VANILLA_KERNELS: [usize; 2] = [3, 5];
pub(crate) const VANILLA_CHANNELS: [usize; 3] = [8, 16, 32];
pub(crate) const VANILLA_HIDDEN: [usize; 3] = [32, 64, 128];
pub(crate) const CONV_CHANNELS: [usize; 4] = [8, 16, 32, 48];
pub(crate) const DILATIONS: [usize; 2] = [2, 3];
pub(crate) const MAX_STAGES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Vanilla,
    Conv,
    Dilated,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Vanilla, Family::Conv, Family::Dilated];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Vanilla => "vanilla",
            Family::Conv => "conv",
            Family::Dilated => "dilated",
        }
    }

    /// Every genotype of this family, in a fixed order.
    pub fn enumerate(self) -> Vec<Genotype> {
        let mut out = Vec::new();
        match self {
            Family::Vanilla => {
                let stage_choices: Vec<VanillaStage> = VANILLA_KERNELS
                    .iter()
                    .flat_map(|&kernel| {
                        VANILLA_CHANNELS
                            .iter()
                            .map(move |&channels| VanillaStage { kernel, channels })
                    })
                    .collect();
                for n in 1..=MAX_STAGES {
                    for stages in product(&stage_choices, n) {
                        for &dense_hidden in &VANILLA_HIDDEN {
                            out.push(Genotype::Vanilla {
                                stages: stages.clone(),
                                dense_hidden,
                            });
                        }
                    }
                }
            }
            Family::Conv => {
                for n in 1..=MAX_STAGES {
                    for channels in product(&CONV_CHANNELS, n) {
                        out.push(Genotype::Conv { channels });
                    }
                }
            }
            Family::Dilated => {
                let choices: Vec<(usize, usize)> = CONV_CHANNELS
                    .iter()
                    .flat_map(|&c| DILATIONS.iter().map(move |&d| (c, d)))
                    .collect();
                for n in 1..=MAX_STAGES {
                    for blocks in product(&choices, n) {
                        out.push(Genotype::Dilated { blocks });
                    }
                }
            }
        }
        out
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Family::Vanilla),
            "conv" => Ok(Family::Conv),
            "dilated" => Ok(Family::Dilated),
            _ => Err(Error::Genotype(format!("unknown family `{s}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn product<T: Clone>(choices: &[T], n: usize) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..n {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c.clone());
                    v
                })
            })
            .collect();
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VanillaStage {
    pub kernel: usize,
    pub channels: usize,
}

/// Body structure of a candidate network. The output head is not part of the
/// genotype, so two models that differ only in class count share a key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Genotype {
    Vanilla {
        stages: Vec<VanillaStage>,
        dense_hidden: usize,
    },
    Conv {
        channels: Vec<usize>,
    },
    /// `(channels, dilation)` per block.
    Dilated {
        blocks: Vec<(usize, usize)>,
    },
}

/// One layer of a realized network. Every convolution is followed by ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        side: usize,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        dilation: usize,
    },
    MaxPool {
        side: usize,
        channels: usize,
    },
    Dense {
        inputs: usize,
        outputs: usize,
        relu: bool,
    },
}

impl LayerSpec {
    pub fn weight_len(&self) -> usize {
        match *self {
            LayerSpec::Conv {
                in_ch,
                out_ch,
                kernel,
                ..
            } => kernel * kernel * in_ch * out_ch,
            LayerSpec::MaxPool { .. } => 0,
            LayerSpec::Dense {
                inputs, outputs, ..
            } => inputs * outputs,
        }
    }

    pub fn bias_len(&self) -> usize {
        match *self {
            LayerSpec::Conv { out_ch, .. } => out_ch,
            LayerSpec::MaxPool { .. } => 0,
            LayerSpec::Dense { outputs, .. } => outputs,
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Conv { in_ch, kernel, .. } => kernel * kernel * in_ch,
            LayerSpec::MaxPool { .. } => 0,
            LayerSpec::Dense { inputs, .. } => inputs,
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            LayerSpec::Conv { side, in_ch, .. } => side * side * in_ch,
            LayerSpec::MaxPool { side, channels } => side * side * channels,
            LayerSpec::Dense { inputs, .. } => inputs,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            LayerSpec::Conv { side, out_ch, .. } => side * side * out_ch,
            LayerSpec::MaxPool { side, channels } => (side / 2) * (side / 2) * channels,
            LayerSpec::Dense { outputs, .. } => outputs,
        }
    }
}

impl Genotype {
    pub fn family(&self) -> Family {
        match self {
            Genotype::Vanilla { .. } => Family::Vanilla,
            Genotype::Conv { .. } => Family::Conv,
            Genotype::Dilated { .. } => Family::Dilated,
        }
    }

    /// Canonical body-only identity used to compare trials across datasets.
    pub fn key(&self) -> String {
        format!("{self}")
    }

    /// Checks that every gene is inside the family's search space.
    pub fn validate(&self) -> Result<()> {
        let stages = match self {
            Genotype::Vanilla {
                stages,
                dense_hidden,
            } => {
                for s in stages {
                    if !VANILLA_KERNELS.contains(&s.kernel) || !VANILLA_CHANNELS.contains(&s.channels) {
                        return Err(Error::Genotype(format!("vanilla stage {s:?} out of range")));
                    }
                }
                if !VANILLA_HIDDEN.contains(dense_hidden) {
                    return Err(Error::Genotype(format!("dense_hidden {dense_hidden} out of range")));
                }
                stages.len()
            }
            Genotype::Conv { channels } => {
                if let Some(c) = channels.iter().find(|c| !CONV_CHANNELS.contains(c)) {
                    return Err(Error::Genotype(format!("conv channels {c} out of range")));
                }
                channels.len()
            }
            Genotype::Dilated { blocks } => {
                for &(c, d) in blocks {
                    if !CONV_CHANNELS.contains(&c) || !DILATIONS.contains(&d) {
                        return Err(Error::Genotype(format!("dilated block ({c}, {d}) out of range")));
                    }
                }
                blocks.len()
            }
        };
        if !(1..=MAX_STAGES).contains(&stages) {
            return Err(Error::Genotype(format!("{stages} stages, expected 1..={MAX_STAGES}")));
        }
        Ok(())
    }

    /// Layer recipe for a given input side and head size.
    pub fn layers(&self, input_side: usize, head_classes: usize) -> Result<Vec<LayerSpec>> {
        let mut layers = Vec::new();
        let mut side = input_side;
        let mut ch = 3;
        let pool = |layers: &mut Vec<LayerSpec>, side: &mut usize, ch: usize| -> Result<()> {
            if *side < 2 {
                return Err(Error::InvalidParam(format!(
                    "input side {input_side} too small for {self}"
                )));
            }
            layers.push(LayerSpec::MaxPool { side: *side, channels: ch });
            *side /= 2;
            Ok(())
        };
        let conv = |side, in_ch, out_ch, kernel, dilation| LayerSpec::Conv {
            side,
            in_ch,
            out_ch,
            kernel,
            dilation,
        };
        match self {
            Genotype::Vanilla {
                stages,
                dense_hidden,
            } => {
                for s in stages {
                    layers.push(conv(side, ch, s.channels, s.kernel, 1));
                    ch = s.channels;
                    pool(&mut layers, &mut side, ch)?;
                }
                layers.push(LayerSpec::Dense {
                    inputs: side * side * ch,
                    outputs: *dense_hidden,
                    relu: true,
                });
                layers.push(LayerSpec::Dense {
                    inputs: *dense_hidden,
                    outputs: head_classes,
                    relu: false,
                });
                return Ok(layers);
            }
            Genotype::Conv { channels } => {
                for &c in channels {
                    layers.push(conv(side, ch, c, 3, 1));
                    layers.push(conv(side, c, c, 3, 1));
                    ch = c;
                    pool(&mut layers, &mut side, ch)?;
                }
            }
            Genotype::Dilated { blocks } => {
                for &(c, d) in blocks {
                    layers.push(conv(side, ch, c, 3, 1));
                    layers.push(conv(side, c, c, 3, d));
                    ch = c;
                    pool(&mut layers, &mut side, ch)?;
                }
            }
        }
        layers.push(LayerSpec::Dense {
            inputs: side * side * ch,
            outputs: head_classes,
            relu: false,
        });
        Ok(layers)
    }

    /// Closed-form trainable parameter count.
    pub fn param_count(&self, input_side: usize, head_classes: usize) -> Result<usize> {
        Ok(self
            .layers(input_side, head_classes)?
            .iter()
            .map(|l| l.weight_len() + l.bias_len())
            .sum())
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family())?;
        match self {
            Genotype::Vanilla {
                stages,
                dense_hidden,
            } => {
                for (i, s) in stages.iter().enumerate() {
                    if i > 0 {
                        f.write_str("-")?;
                    }
                    write!(f, "k{}c{}", s.kernel, s.channels)?;
                }
                write!(f, "/h{dense_hidden}")
            }
            Genotype::Conv { channels } => {
                for (i, c) in channels.iter().enumerate() {
                    if i > 0 {
                        f.write_str("-")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            Genotype::Dilated { blocks } => {
                for (i, (c, d)) in blocks.iter().enumerate() {
                    if i > 0 {
                        f.write_str("-")?;
                    }
                    write!(f, "{c}d{d}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_num(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Genotype(format!("bad {what} `{s}`")))
}

impl FromStr for Genotype {
    type Err = Error;

    /// Parses the canonical key, e.g. `vanilla:k3c8-k5c16/h64`, `conv:8-16`,
    /// `dilated:8d2-16d3`.
    fn from_str(s: &str) -> Result<Self> {
        let (fam, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Genotype(format!("missing family in `{s}`")))?;
        let g = match fam.parse::<Family>()? {
            Family::Vanilla => {
                let (st, hidden) = body
                    .split_once("/h")
                    .ok_or_else(|| Error::Genotype(format!("missing dense size in `{s}`")))?;
                let stages = st
                    .split('-')
                    .map(|part| {
                        let rest = part
                            .strip_prefix('k')
                            .ok_or_else(|| Error::Genotype(format!("bad stage `{part}`")))?;
                        let (k, c) = rest
                            .split_once('c')
                            .ok_or_else(|| Error::Genotype(format!("bad stage `{part}`")))?;
                        Ok(VanillaStage {
                            kernel: parse_num(k, "kernel")?,
                            channels: parse_num(c, "channels")?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Genotype::Vanilla {
                    stages,
                    dense_hidden: parse_num(hidden, "dense size")?,
                }
            }
            Family::Conv => Genotype::Conv {
                channels: body
                    .split('-')
                    .map(|c| parse_num(c, "channels"))
                    .collect::<Result<_>>()?,
            },
            Family::Dilated => Genotype::Dilated {
                blocks: body
                    .split('-')
                    .map(|part| {
                        let (c, d) = part
                            .split_once('d')
                            .ok_or_else(|| Error::Genotype(format!("bad block `{part}`")))?;
                        Ok((parse_num(c, "channels")?, parse_num(d, "dilation")?))
                    })
                    .collect::<Result<_>>()?,
            },
        };
        g.validate()?;
        Ok(g)
    }
}

impl Serialize for Genotype {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
