//! Orthonormal wavelet bases on the grid: periodized Meyer and periodic Daubechies.
//!
//! Coefficients are stored in a flat [`CoeffField`]: the scaling block at `j_min` first, then
//! for each level `j_min <= j < J` the `2^n - 1` detail blocks ordered by type `ε`. Each block
//! is row-major in the position `k`. Types are bit masks, bit `d` set meaning the wavelet
//! factor along axis `d`.

pub mod daubechies;
pub mod window;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{OscilletError, Result};
use crate::grid::{flatten_side, unflatten_side, DyadicCube, GridFunction, GridSpec};
use crate::spectral::{signed_freq, FftBank};
use daubechies::FilterPair;
pub use window::{MeyerWindow, TransitionProfile};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    Meyer { profile: TransitionProfile },
    Daubechies { order: usize },
}

impl Family {
    pub fn meyer() -> Self {
        Family::Meyer { profile: TransitionProfile::Polynomial }
    }

    pub fn daubechies(order: usize) -> Self {
        Family::Daubechies { order }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Meyer { .. } => "meyer".into(),
            Family::Daubechies { order } => format!("db{order}"),
        }
    }
}

/// Index `(ε, j, k)`; `ε = 0` denotes the scaling function at `j_min`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveletIndex {
    pub eps: u8,
    pub level: u32,
    pub position: Vec<usize>,
}

impl WaveletIndex {
    pub fn new(eps: u8, level: u32, position: Vec<usize>) -> Self {
        WaveletIndex { eps, level, position }
    }

    pub fn is_scaling(&self) -> bool {
        self.eps == 0
    }

    /// Per-axis type bits.
    pub fn eps_bits(&self) -> Vec<u8> {
        (0..self.position.len()).map(|d| (self.eps >> d) & 1).collect()
    }

    pub fn cube(&self) -> DyadicCube {
        DyadicCube { level: self.level, position: self.position.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub level: u32,
    pub eps: u8,
    pub offset: usize,
    pub len: usize,
}

/// Flat layout of coefficient fields on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub j_min: u32,
    pub resolution: u32,
}

impl Layout {
    pub fn new(spec: &GridSpec) -> Self {
        Layout { n: spec.n(), j_min: spec.j_min(), resolution: spec.resolution() }
    }

    pub fn types(&self) -> u8 {
        ((1u32 << self.n) - 1) as u8
    }

    pub fn block_len(&self, j: u32) -> usize {
        1usize << (self.n * j as usize)
    }

    pub fn total(&self) -> usize {
        1usize << (self.n * self.resolution as usize)
    }

    pub fn detail_start(&self) -> usize {
        self.block_len(self.j_min)
    }

    /// Offset of the detail block `(j, ε)`, `ε >= 1`, or of the scaling block for `ε = 0`.
    pub fn block_offset(&self, j: u32, eps: u8) -> usize {
        if eps == 0 {
            return 0;
        }
        // Details below level j occupy 2^{nj} - 2^{n j_min} entries.
        self.block_len(j) + (eps as usize - 1) * self.block_len(j)
    }

    pub fn blocks(&self) -> Vec<Block> {
        let mut out = vec![Block {
            level: self.j_min,
            eps: 0,
            offset: 0,
            len: self.block_len(self.j_min),
        }];
        for j in self.j_min..self.resolution {
            for eps in 1..=self.types() {
                out.push(Block {
                    level: j,
                    eps,
                    offset: self.block_offset(j, eps),
                    len: self.block_len(j),
                });
            }
        }
        out
    }

    pub fn decode(&self, flat: usize) -> WaveletIndex {
        if flat < self.detail_start() {
            return WaveletIndex::new(0, self.j_min, unflatten_side(flat, 1 << self.j_min, self.n));
        }
        // Level j details span [2^{nj}, 2^{n(j+1)}).
        let j = (usize::BITS - 1 - flat.leading_zeros()) / self.n as u32;
        let base = self.block_len(j);
        let within = flat - base;
        let eps = (within / base + 1) as u8;
        let k = within % base;
        WaveletIndex::new(eps, j, unflatten_side(k, 1 << j, self.n))
    }

    pub fn encode(&self, idx: &WaveletIndex) -> Result<usize> {
        let bad = || OscilletError::Index(format!("wavelet index {idx:?} outside the layout"));
        if idx.position.len() != self.n || idx.eps > self.types() {
            return Err(bad());
        }
        if idx.eps == 0 && idx.level != self.j_min {
            return Err(bad());
        }
        if idx.level < self.j_min || idx.level >= self.resolution {
            return Err(bad());
        }
        let side = 1usize << idx.level;
        if idx.position.iter().any(|&k| k >= side) {
            return Err(bad());
        }
        Ok(self.block_offset(idx.level, idx.eps) + flatten_side(&idx.position, side))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffField {
    spec: GridSpec,
    family: Family,
    data: Vec<Complex64>,
}

impl CoeffField {
    pub fn zeros(spec: GridSpec, family: Family) -> Self {
        CoeffField { spec, family, data: vec![ZERO; spec.len()] }
    }

    pub fn from_data(spec: GridSpec, family: Family, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(OscilletError::Shape(format!(
                "{} coefficients for a grid of {} samples",
                data.len(),
                spec.len()
            )));
        }
        Ok(CoeffField { spec, family, data })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.spec)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, idx: &WaveletIndex) -> Result<Complex64> {
        Ok(self.data[self.layout().encode(idx)?])
    }

    pub fn set(&mut self, idx: &WaveletIndex, v: Complex64) -> Result<()> {
        let f = self.layout().encode(idx)?;
        self.data[f] = v;
        Ok(())
    }

    pub fn block(&self, j: u32, eps: u8) -> &[Complex64] {
        let l = self.layout();
        let off = l.block_offset(j, eps);
        &self.data[off..off + l.block_len(j)]
    }

    pub fn block_mut(&mut self, j: u32, eps: u8) -> &mut [Complex64] {
        let l = self.layout();
        let off = l.block_offset(j, eps);
        &mut self.data[off..off + l.block_len(j)]
    }

    /// All entries with their indices, scaling block first.
    pub fn iter(&self) -> impl Iterator<Item = (WaveletIndex, Complex64)> + '_ {
        let l = self.layout();
        self.data.iter().enumerate().map(move |(f, &v)| (l.decode(f), v))
    }

    pub fn detail_max_abs(&self) -> f64 {
        self.data[self.layout().detail_start()..]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CoeffField) -> Result<f64> {
        if self.spec != other.spec {
            return Err(OscilletError::Shape("coefficient fields on different grids".into()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn scale(&self, s: Complex64) -> CoeffField {
        CoeffField {
            spec: self.spec,
            family: self.family,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Squared `ℓ²` norm of all coefficients.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Zeroes every coefficient for which `keep(level, eps)` is false.
    pub fn retain_blocks(&mut self, keep: impl Fn(u32, u8) -> bool) {
        for b in self.layout().blocks() {
            if !keep(b.level, b.eps) {
                self.data[b.offset..b.offset + b.len].iter_mut().for_each(|v| *v = ZERO);
            }
        }
    }
}

type MultList = Vec<(usize, Complex64)>;

#[derive(Debug, Clone)]
struct MeyerEngine {
    /// Scaling multipliers `2^{-j/2} Ψ⁰(2πℓ/2^j)` for levels `0..J`.
    scaling: Vec<MultList>,
    /// Wavelet multipliers for levels `0..J`; level `J-1` uses the closure window.
    wavelet: Vec<MultList>,
}

impl MeyerEngine {
    fn new(spec: &GridSpec, window: MeyerWindow) -> Self {
        let side = spec.side();
        let big_j = spec.resolution();
        let mut scaling = Vec::new();
        let mut wavelet = Vec::new();
        for j in 0..big_j {
            let amp = (-(j as f64) / 2.0).exp2();
            let mut s = Vec::new();
            let mut w = Vec::new();
            for b in 0..side {
                let xi = 2.0 * std::f64::consts::PI * signed_freq(b, side) as f64 / (1u64 << j) as f64;
                let v0 = window.psi0(xi);
                if v0 != 0.0 {
                    s.push((b, Complex64::new(amp * v0, 0.0)));
                }
                let v1 = if j + 1 == big_j { window.psi1_closure(xi) } else { window.psi1(xi) };
                if v1 != ZERO {
                    w.push((b, v1 * amp));
                }
            }
            scaling.push(s);
            wavelet.push(w);
        }
        MeyerEngine { scaling, wavelet }
    }

    fn lists(&self, j: u32, eps: u8, n: usize) -> Vec<&[(usize, Complex64)]> {
        (0..n)
            .map(|d| {
                if (eps >> d) & 1 == 1 {
                    self.wavelet[j as usize].as_slice()
                } else {
                    self.scaling[j as usize].as_slice()
                }
            })
            .collect()
    }
}

/// Calls `f(full_bin, folded_bin, weight)` over the tensor product of per-axis lists.
fn visit_products(
    lists: &[&[(usize, Complex64)]],
    side: usize,
    small: usize,
    f: &mut impl FnMut(usize, usize, Complex64),
) {
    fn rec(
        lists: &[&[(usize, Complex64)]],
        d: usize,
        full: usize,
        folded: usize,
        w: Complex64,
        side: usize,
        small: usize,
        f: &mut impl FnMut(usize, usize, Complex64),
    ) {
        if d == lists.len() {
            f(full, folded, w);
            return;
        }
        for &(b, m) in lists[d] {
            rec(lists, d + 1, full * side + b, folded * small + (b & (small - 1)), w * m, side, small, f);
        }
    }
    rec(lists, 0, 0, 0, Complex64::new(1.0, 0.0), side, small, f);
}

#[derive(Debug, Clone)]
enum Engine {
    Meyer(MeyerEngine),
    Daubechies(FilterPair),
}

/// A complete orthonormal wavelet basis of the grid functions on a [`GridSpec`].
///
/// Meyer levels `j <= J-2` are exact periodizations; the finest level `J-1` uses the closure
/// window so that the basis spans every grid function.
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    spec: GridSpec,
    family: Family,
    bank: FftBank,
    engine: Engine,
}

impl WaveletBasis {
    pub fn new(spec: GridSpec, family: Family) -> Result<Self> {
        let engine = match family {
            Family::Meyer { profile } => Engine::Meyer(MeyerEngine::new(&spec, MeyerWindow::new(profile))),
            Family::Daubechies { order } => Engine::Daubechies(FilterPair::new(order).ok_or_else(|| {
                OscilletError::Construction(format!(
                    "Daubechies order {order} outside 1..={}",
                    daubechies::MAX_ORDER
                ))
            })?),
        };
        Ok(WaveletBasis { spec, family, bank: FftBank::new(spec.resolution()), engine })
    }

    pub fn meyer(spec: GridSpec) -> Self {
        WaveletBasis::new(spec, Family::meyer()).expect("Meyer construction cannot fail on a valid grid")
    }

    pub fn daubechies(spec: GridSpec, order: usize) -> Result<Self> {
        WaveletBasis::new(spec, Family::daubechies(order))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.spec)
    }

    pub fn bank(&self) -> &FftBank {
        &self.bank
    }

    pub fn is_meyer(&self) -> bool {
        matches!(self.engine, Engine::Meyer(_))
    }

    fn check_grid(&self, spec: &GridSpec) -> Result<()> {
        if *spec != self.spec {
            return Err(OscilletError::Shape(format!(
                "grid {spec:?} does not match basis grid {:?}",
                self.spec
            )));
        }
        Ok(())
    }

    pub fn analyze(&self, f: &GridFunction) -> Result<CoeffField> {
        self.check_grid(f.spec())?;
        match &self.engine {
            Engine::Meyer(_) => Ok(self.analyze_spectrum(&self.bank.fourier_coefficients(f))),
            Engine::Daubechies(filters) => Ok(self.dwt(filters, f.values())),
        }
    }

    /// Analysis from bin-indexed Fourier coefficients `f̂`.
    pub fn analyze_spectrum(&self, fh: &[Complex64]) -> CoeffField {
        match &self.engine {
            Engine::Meyer(m) => self.meyer_analyze(m, fh),
            Engine::Daubechies(filters) => {
                let f = self.bank.from_fourier(&self.spec, fh.to_vec());
                self.dwt(filters, f.values())
            }
        }
    }

    pub fn synthesize(&self, c: &CoeffField) -> Result<GridFunction> {
        self.check_grid(c.spec())?;
        match &self.engine {
            Engine::Meyer(m) => Ok(self.bank.from_fourier(&self.spec, self.meyer_synthesize(m, c))),
            Engine::Daubechies(filters) => Ok(self.idwt(filters, c)),
        }
    }

    /// Bin-indexed Fourier coefficients of the synthesized function.
    pub fn synthesize_spectrum(&self, c: &CoeffField) -> Result<Vec<Complex64>> {
        self.check_grid(c.spec())?;
        match &self.engine {
            Engine::Meyer(m) => Ok(self.meyer_synthesize(m, c)),
            Engine::Daubechies(filters) => Ok(self.bank.fourier_coefficients(&self.idwt(filters, c))),
        }
    }

    pub fn basis_function(&self, idx: &WaveletIndex) -> Result<GridFunction> {
        let mut c = CoeffField::zeros(self.spec, self.family);
        c.set(idx, Complex64::new(1.0, 0.0))?;
        self.synthesize(&c)
    }

    fn meyer_analyze(&self, m: &MeyerEngine, fh: &[Complex64]) -> CoeffField {
        let layout = self.layout();
        let n = self.spec.n();
        let mut out = CoeffField::zeros(self.spec, self.family);
        for b in layout.blocks() {
            let block = self.meyer_fold(m, fh, b.level, b.eps, n);
            out.data[b.offset..b.offset + b.len].copy_from_slice(&block);
        }
        out
    }

    /// `c_k = Σ_r G(r) e^{2πi r·k/2^j}` with `G(r) = Σ_{ℓ ≡ r} f̂(ℓ) conj(W(ℓ))`.
    fn meyer_fold(&self, m: &MeyerEngine, fh: &[Complex64], j: u32, eps: u8, n: usize) -> Vec<Complex64> {
        let small = 1usize << j;
        let mut g = vec![ZERO; small.pow(n as u32)];
        let lists = m.lists(j, eps, n);
        visit_products(&lists, self.spec.side(), small, &mut |full, folded, w| {
            g[folded] += fh[full] * w.conj();
        });
        self.bank.transform(&mut g, j, n, true);
        g
    }

    fn meyer_synthesize(&self, m: &MeyerEngine, c: &CoeffField) -> Vec<Complex64> {
        let n = self.spec.n();
        let mut fh = vec![ZERO; self.spec.len()];
        for b in self.layout().blocks() {
            let small = 1usize << b.level;
            let mut big_c = c.data[b.offset..b.offset + b.len].to_vec();
            if big_c.iter().all(|v| *v == ZERO) {
                continue;
            }
            self.bank.transform(&mut big_c, b.level, n, false);
            let lists = m.lists(b.level, b.eps, n);
            visit_products(&lists, self.spec.side(), small, &mut |full, folded, w| {
                fh[full] += w * big_c[folded];
            });
        }
        fh
    }

    fn dwt(&self, filters: &FilterPair, values: &[Complex64]) -> CoeffField {
        let n = self.spec.n();
        let side = self.spec.side();
        let scale = (self.spec.len() as f64).sqrt().recip();
        let mut re: Vec<f64> = values.iter().map(|v| v.re * scale).collect();
        let mut im: Vec<f64> = values.iter().map(|v| v.im * scale).collect();
        let has_im = im.iter().any(|&v| v != 0.0);
        let layout = self.layout();
        let mut out = CoeffField::zeros(self.spec, self.family);
        let mut s = side;
        for j in (self.spec.j_min()..self.spec.resolution()).rev() {
            daubechies::along_axes(&mut re, side, s, n, |x, o| filters.analyze_line(x, o));
            if has_im {
                daubechies::along_axes(&mut im, side, s, n, |x, o| filters.analyze_line(x, o));
            }
            let half = s / 2;
            for eps in 1..=layout.types() {
                let off = layout.block_offset(j, eps);
                for k in 0..layout.block_len(j) {
                    let f = subband_flat(k, eps, half, side, n);
                    out.data[off + k] = Complex64::new(re[f], im[f]);
                }
            }
            s = half;
        }
        for k in 0..layout.block_len(self.spec.j_min()) {
            let f = subband_flat(k, 0, s, side, n);
            out.data[k] = Complex64::new(re[f], im[f]);
        }
        out
    }

    fn idwt(&self, filters: &FilterPair, c: &CoeffField) -> GridFunction {
        let n = self.spec.n();
        let side = self.spec.side();
        let layout = self.layout();
        let mut re = vec![0.0; self.spec.len()];
        let mut im = vec![0.0; self.spec.len()];
        let has_im = c.data.iter().any(|v| v.im != 0.0);
        let mut s = 1usize << self.spec.j_min();
        for k in 0..layout.block_len(self.spec.j_min()) {
            let f = subband_flat(k, 0, s, side, n);
            re[f] = c.data[k].re;
            im[f] = c.data[k].im;
        }
        for j in self.spec.j_min()..self.spec.resolution() {
            let half = s;
            s *= 2;
            for eps in 1..=layout.types() {
                let off = layout.block_offset(j, eps);
                for k in 0..layout.block_len(j) {
                    let f = subband_flat(k, eps, half, side, n);
                    re[f] = c.data[off + k].re;
                    im[f] = c.data[off + k].im;
                }
            }
            daubechies::along_axes(&mut re, side, s, n, |x, o| filters.synthesize_line(x, o));
            if has_im {
                daubechies::along_axes(&mut im, side, s, n, |x, o| filters.synthesize_line(x, o));
            }
        }
        let scale = (self.spec.len() as f64).sqrt();
        let values = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a * scale, b * scale)).collect();
        GridFunction::new(self.spec, values).expect("sizes agree")
    }

    /// Scaling coefficients `⟨f, Φ⁰_{j,k}⟩` at any level `0 <= j < J`, row-major in `k`.
    pub fn scaling_coefficients(&self, f: &GridFunction, j: u32) -> Result<Vec<Complex64>> {
        self.check_grid(f.spec())?;
        match &self.engine {
            Engine::Meyer(_) => self.scaling_from_spectrum(&self.bank.fourier_coefficients(f), j),
            Engine::Daubechies(_) => self.scaling_from_spectrum(f.values(), j),
        }
    }

    /// As [`WaveletBasis::scaling_coefficients`]; Meyer bases take bin-indexed Fourier
    /// coefficients, Daubechies bases take grid samples.
    pub fn scaling_from_spectrum(&self, data: &[Complex64], j: u32) -> Result<Vec<Complex64>> {
        if j >= self.spec.resolution() {
            return Err(OscilletError::Range(format!(
                "scaling level {j} must lie below J={}",
                self.spec.resolution()
            )));
        }
        let n = self.spec.n();
        match &self.engine {
            Engine::Meyer(m) => {
                let small = 1usize << j;
                let mut g = vec![ZERO; small.pow(n as u32)];
                let lists: Vec<&[(usize, Complex64)]> = (0..n).map(|_| m.scaling[j as usize].as_slice()).collect();
                visit_products(&lists, self.spec.side(), small, &mut |full, folded, w| {
                    g[folded] += data[full] * w.conj();
                });
                self.bank.transform(&mut g, j, n, true);
                Ok(g)
            }
            Engine::Daubechies(filters) => {
                let side = self.spec.side();
                let scale = (self.spec.len() as f64).sqrt().recip();
                let mut re: Vec<f64> = data.iter().map(|v| v.re * scale).collect();
                let mut im: Vec<f64> = data.iter().map(|v| v.im * scale).collect();
                let mut s = side;
                while s > 1 << j {
                    daubechies::along_axes(&mut re, side, s, n, |x, o| filters.analyze_line(x, o));
                    daubechies::along_axes(&mut im, side, s, n, |x, o| filters.analyze_line(x, o));
                    s /= 2;
                }
                Ok((0..s.pow(n as u32))
                    .map(|k| {
                        let f = subband_flat(k, 0, s, side, n);
                        Complex64::new(re[f], im[f])
                    })
                    .collect())
            }
        }
    }

    /// `P_j f`, the projection onto `V_j` for `j_min <= j <= J` (`P_J` is the identity).
    pub fn project(&self, f: &GridFunction, j: u32) -> Result<GridFunction> {
        if j < self.spec.j_min() || j > self.spec.resolution() {
            return Err(OscilletError::Range(format!(
                "projection level {j} outside {}..={}",
                self.spec.j_min(),
                self.spec.resolution()
            )));
        }
        let mut c = self.analyze(f)?;
        c.retain_blocks(|level, eps| eps == 0 || level < j);
        self.synthesize(&c)
    }

    /// `Q_j f = P_{j+1} f - P_j f` for `j_min <= j < J`.
    pub fn detail(&self, f: &GridFunction, j: u32) -> Result<GridFunction> {
        if j < self.spec.j_min() || j >= self.spec.resolution() {
            return Err(OscilletError::Range(format!(
                "detail level {j} outside {}..{}",
                self.spec.j_min(),
                self.spec.resolution()
            )));
        }
        let mut c = self.analyze(f)?;
        c.retain_blocks(|level, eps| eps != 0 && level == j);
        self.synthesize(&c)
    }

    /// Five-part paraproduct split of the pointwise product `uv`.
    pub fn paraproduct(&self, u: &GridFunction, v: &GridFunction) -> Result<Paraproduct> {
        let j_min = self.spec.j_min();
        let big_j = self.spec.resolution();
        if big_j < j_min + 4 {
            return Err(OscilletError::Range(format!(
                "paraproduct band j_min+3..J-1 is empty for j_min={j_min}, J={big_j}"
            )));
        }
        let pieces = |f: &GridFunction| -> Result<Vec<GridFunction>> {
            let c = self.analyze(f)?;
            let mut out = Vec::new();
            let mut coarse = c.clone();
            coarse.retain_blocks(|_, eps| eps == 0);
            out.push(self.synthesize(&coarse)?);
            for j in j_min..big_j {
                let mut d = c.clone();
                d.retain_blocks(|level, eps| eps != 0 && level == j);
                out.push(self.synthesize(&d)?);
            }
            Ok(out)
        };
        let pu = pieces(u)?;
        let pv = pieces(v)?;
        // prefix[i] = P_{j_min + i}, i.e. the sum of pieces 0..=i.
        let prefix = |p: &[GridFunction]| -> Result<Vec<GridFunction>> {
            let mut out: Vec<GridFunction> = vec![p[0].clone()];
            for piece in &p[1..] {
                let next = out.last().unwrap().add(piece)?;
                out.push(next);
            }
            Ok(out)
        };
        let su = prefix(&pu)?;
        let sv = prefix(&pv)?;
        let low = |j: u32| (j.saturating_sub(3).max(j_min) - j_min) as usize;
        let q = |p: &[GridFunction], j: u32| p[(j - j_min + 1) as usize].clone();
        let zero = GridFunction::zeros(self.spec);
        let mut parts = [zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero];
        parts[0] = pu[0].mul(&pv[0])?;
        for j in j_min..big_j {
            parts[0] = parts[0].add(&su[low(j)].mul(&q(&pv, j))?)?;
            parts[4] = parts[4].add(&q(&pu, j).mul(&sv[low(j)])?)?;
            parts[1] = parts[1].add(&q(&pu, j).mul(&q(&pv, j))?)?;
            for jp in j_min..big_j {
                if j > jp && j - jp <= 3 {
                    parts[2] = parts[2].add(&q(&pu, j).mul(&q(&pv, jp))?)?;
                }
                if jp > j && jp - j <= 3 {
                    parts[3] = parts[3].add(&q(&pu, j).mul(&q(&pv, jp))?)?;
                }
            }
        }
        Ok(Paraproduct { parts })
    }
}

/// Paraproduct parts: low-high, diagonal, near-diagonal (`u` finer), near-diagonal (`v` finer),
/// high-low. The coarse scaling piece at `j_min` is grouped with the low factor.
#[derive(Debug, Clone)]
pub struct Paraproduct {
    pub parts: [GridFunction; 5],
}

impl Paraproduct {
    pub fn sum(&self) -> GridFunction {
        let mut s = self.parts[0].clone();
        for p in &self.parts[1..] {
            s = s.add(p).expect("parts share a grid");
        }
        s
    }
}

/// Flat index in a side-`side` array of entry `k` of sub-band `eps` of half-width `half`.
fn subband_flat(k: usize, eps: u8, half: usize, side: usize, n: usize) -> usize {
    let mut rest = k;
    let mut idx = vec![0; n];
    for d in (0..n).rev() {
        idx[d] = rest % half + ((eps as usize >> d) & 1) * half;
        rest /= half;
    }
    flatten_side(&idx, side)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bases(spec: GridSpec) -> Vec<WaveletBasis> {
        vec![
            WaveletBasis::meyer(spec),
            WaveletBasis::new(spec, Family::Meyer { profile: TransitionProfile::Exponential }).unwrap(),
            WaveletBasis::daubechies(spec, 3).unwrap(),
        ]
    }

    fn sample(spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x| {
            let s: f64 = x.iter().enumerate().map(|(d, v)| (d as f64 + 1.3) * v).sum();
            Complex64::new((7.0 * s).sin() + (s * 40.0).cos().powi(3), (3.0 * s).cos() * 0.2)
        })
    }

    #[test]
    fn layout_round_trip() {
        for (n, big_j, j_min) in [(1, 6, 0), (2, 4, 1), (3, 3, 0)] {
            let spec = GridSpec::new(n, big_j, j_min).unwrap();
            let l = Layout::new(&spec);
            let blocks = l.blocks();
            assert_eq!(blocks.iter().map(|b| b.len).sum::<usize>(), spec.len());
            for w in blocks.windows(2) {
                assert_eq!(w[0].offset + w[0].len, w[1].offset);
            }
            for f in 0..spec.len() {
                assert_eq!(l.encode(&l.decode(f)).unwrap(), f);
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for (n, big_j, j_min) in [(1, 7, 0), (1, 5, 2), (2, 4, 0), (3, 3, 1), (1, 1, 0)] {
            let spec = GridSpec::new(n, big_j, j_min).unwrap();
            let f = sample(spec);
            let e = f.inner(&f).unwrap().re;
            for b in bases(spec) {
                let c = b.analyze(&f).unwrap();
                assert!((c.energy() - e).abs() < 1e-10 * e, "{:?} {n} {big_j}", b.family());
                let g = b.synthesize(&c).unwrap();
                assert!(g.max_abs_diff(&f).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn meyer_basis_functions_are_real() {
        let spec = GridSpec::new(1, 6, 0).unwrap();
        let b = WaveletBasis::meyer(spec);
        for f in [0, 1, 5, 20, 40, 63] {
            let psi = b.basis_function(&b.layout().decode(f)).unwrap();
            assert!(psi.values().iter().all(|v| v.im.abs() < 1e-13));
        }
    }

    #[test]
    fn scaling_coefficients_match_projection() {
        let spec = GridSpec::new(2, 5, 1).unwrap();
        let f = sample(spec);
        for b in bases(spec) {
            let c = b.analyze(&f).unwrap();
            let direct = b.scaling_coefficients(&f, 1).unwrap();
            let block = c.block(1, 0);
            for (a, d) in direct.iter().zip(block) {
                assert!((a - d).norm() < 1e-12);
            }
            // Energy of P_3 f equals the level-3 scaling energy.
            let p3 = b.project(&f, 3).unwrap();
            let s3: f64 = b.scaling_coefficients(&f, 3).unwrap().iter().map(|v| v.norm_sqr()).sum();
            assert!((p3.inner(&p3).unwrap().re - s3).abs() < 1e-10);
        }
    }

    #[test]
    fn projections_telescope() {
        let spec = GridSpec::new(1, 6, 0).unwrap();
        let f = sample(spec);
        for b in bases(spec) {
            for j in 0..6 {
                let pj = b.project(&f, j).unwrap();
                let pj1 = b.project(&f, j + 1).unwrap();
                let qj = b.detail(&f, j).unwrap();
                assert!(pj1.max_abs_diff(&pj.add(&qj).unwrap()).unwrap() < 1e-10);
                let ppj = b.project(&pj, j).unwrap();
                assert!(ppj.max_abs_diff(&pj).unwrap() < 1e-10);
            }
            assert!(b.project(&f, 6).unwrap().max_abs_diff(&f).unwrap() < 1e-10);
            assert!(b.project(&f, 7).is_err());
        }
    }

    #[test]
    fn paraproduct_reassembles_product() {
        let spec = GridSpec::new(1, 7, 0).unwrap();
        let u = sample(spec);
        let v = GridFunction::from_fn(spec, |x| Complex64::new((2.0 * std::f64::consts::PI * 5.0 * x[0]).sin(), 0.0));
        for b in bases(spec) {
            let p = b.paraproduct(&u, &v).unwrap();
            assert!(p.sum().max_abs_diff(&u.mul(&v).unwrap()).unwrap() < 1e-10);
            let c = GridFunction::from_real(spec, &vec![2.5; spec.len()]).unwrap();
            let pc = b.paraproduct(&c, &v).unwrap();
            for part in &pc.parts[1..] {
                assert!(part.max_abs() < 1e-10);
            }
        }
        let small = GridSpec::new(1, 3, 0).unwrap();
        let f = GridFunction::zeros(small);
        assert!(WaveletBasis::meyer(small).paraproduct(&f, &f).is_err());
    }

    #[test]
    fn daubechies_order_is_checked() {
        let spec = GridSpec::new(1, 5, 0).unwrap();
        assert!(matches!(WaveletBasis::daubechies(spec, 0), Err(OscilletError::Construction(_))));
        assert!(WaveletBasis::daubechies(spec, 11).is_err());
    }
}
