//! Named raw arrays: the in-memory side of the parameter bundle format.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F64(Vec<f64>),
    I8(Vec<i8>),
    I16(Vec<i16>),
}

impl ArrayData {
    pub fn len(&self) -> usize {
        match self {
            ArrayData::F64(v) => v.len(),
            ArrayData::I8(v) => v.len(),
            ArrayData::I16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> &'static str {
        match self {
            ArrayData::F64(_) => "f64",
            ArrayData::I8(_) => "i8",
            ArrayData::I16(_) => "i16",
        }
    }

    pub fn byte_len(&self) -> usize {
        match self {
            ArrayData::F64(v) => v.len() * 8,
            ArrayData::I8(v) => v.len(),
            ArrayData::I16(v) => v.len() * 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: ArrayData,
}

impl NamedArray {
    pub fn f64(name: impl Into<String>, shape: &[usize], data: &[f64]) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            data: ArrayData::F64(data.to_vec()),
        }
    }
}

/// Arrays keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrayStore {
    pub arrays: BTreeMap<String, NamedArray>,
}

impl ArrayStore {
    pub fn from_arrays(list: Vec<NamedArray>) -> Self {
        Self {
            arrays: list.into_iter().map(|a| (a.name.clone(), a)).collect(),
        }
    }

    pub fn insert(&mut self, a: NamedArray) {
        self.arrays.insert(a.name.clone(), a);
    }

    fn get(&self, name: &str) -> Result<&NamedArray> {
        self.arrays
            .get(name)
            .ok_or_else(|| Error::Bundle(format!("missing array `{name}`")))
    }

    pub fn f64(&self, name: &str, len: usize) -> Result<Vec<f64>> {
        match &self.get(name)?.data {
            ArrayData::F64(v) if v.len() == len => Ok(v.clone()),
            other => Err(Error::Bundle(format!(
                "array `{name}`: expected {len} f64 values, found {} {}",
                other.len(),
                other.dtype()
            ))),
        }
    }

    pub fn i8(&self, name: &str, len: usize) -> Result<Vec<i8>> {
        match &self.get(name)?.data {
            ArrayData::I8(v) if v.len() == len => Ok(v.clone()),
            other => Err(Error::Bundle(format!(
                "array `{name}`: expected {len} i8 values, found {} {}",
                other.len(),
                other.dtype()
            ))),
        }
    }

    pub fn i16(&self, name: &str, len: usize) -> Result<Vec<i16>> {
        match &self.get(name)?.data {
            ArrayData::I16(v) if v.len() == len => Ok(v.clone()),
            other => Err(Error::Bundle(format!(
                "array `{name}`: expected {len} i16 values, found {} {}",
                other.len(),
                other.dtype()
            ))),
        }
    }

    pub fn total_bytes(&self) -> usize {
        self.arrays.values().map(|a| a.data.byte_len()).sum()
    }
}
