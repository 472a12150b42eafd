//! Explicit Runge–Kutta integrator of order 8 with embedded 5th/3rd order
//! error estimation and 7th order dense output (Dormand–Prince 8(5,3)).
//!
//! Coefficients and step control follow Hairer & Wanner's `dop853`.

use crate::error::{Error, Result};

/// Dense-output polynomial for one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 8],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        let mut out = [0.0; N];
        for i in 0..N {
            let conpar = c[4][i] + s * (c[5][i] + s1 * (c[6][i] + s * c[7][i]));
            out[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * conpar)));
        }
        out
    }
}

/// Stage derivatives of the most recent accepted step.
#[derive(Debug, Clone, Copy)]
struct LastStep<const N: usize> {
    t0: f64,
    h: f64,
    y0: [f64; N],
    k: [[f64; N]; 8], // k1, k6, k7, k8, k9, k10, k11, k12
}

/// Adaptive stepper for `y' = f(t, y)`.
///
/// A right-hand side that returns an error is treated as a rejected step
/// (the trial point left the domain) and the step is shrunk; the integration
/// fails only once the step size underflows.
pub struct Dop853<F, const N: usize> {
    f: F,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
    max_step: f64,
    facold: f64,
    rejected: bool,
    n_eval: usize,
    last: Option<LastStep<N>>,
    dense: Option<DenseStep<N>>,
}

const SAFE: f64 = 0.9;
const FACC1: f64 = 1.0 / 0.333;
const FACC2: f64 = 1.0 / 6.0;
const EXPO1: f64 = 1.0 / 8.0;
const MAX_REJECTS: usize = 200;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn combo<const N: usize>(terms: &[(f64, &[f64; N])]) -> [f64; N] {
    axpy(&[0.0; N], 1.0, terms)
}

impl<F, const N: usize> Dop853<F, N>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    pub fn new(f: F, t0: f64, y0: [f64; N], rtol: f64, atol: f64, max_step: f64) -> Result<Self> {
        let k1 = f(t0, &y0)?;
        let mut s = Dop853 {
            f,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            rtol,
            atol,
            max_step,
            facold: 1e-4,
            rejected: false,
            n_eval: 1,
            last: None,
            dense: None,
        };
        s.h = s.initial_step()?;
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn n_eval(&self) -> usize {
        self.n_eval
    }

    fn eval(&mut self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self.n_eval += 1;
        (self.f)(t, y)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> Result<f64> {
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..N {
            let sk = self.scale(self.y[i], 0.0);
            dnf += (self.k1[i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.max_step);
        let y1 = axpy(&self.y, h, &[(1.0, &self.k1)]);
        let f1 = match self.eval(self.t + h, &y1) {
            Ok(v) => v,
            Err(_) => return Ok(h * 1e-3),
        };
        let der2: f64 = (0..N)
            .map(|i| ((f1[i] - self.k1[i]) / self.scale(self.y[i], 0.0)).powi(2))
            .sum();
        let der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        Ok((100.0 * h).min(h1).min(self.max_step))
    }

    /// Replaces the state at the current time (e.g. after renormalizing a
    /// tangent vector). Dense output of the previous step is discarded.
    pub fn reset(&mut self, y: [f64; N]) -> Result<()> {
        self.k1 = self.eval(self.t, &y)?;
        self.y = y;
        self.last = None;
        self.dense = None;
        Ok(())
    }

    /// Takes one accepted step, never stepping past `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<()> {
        let mut rejects = 0;
        loop {
            let mut h = self.h.min(self.max_step);
            let last_step = self.t + 1.01 * h >= t_end;
            if last_step {
                h = t_end - self.t;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepFailure {
                    t: self.t,
                    reason: "step size underflow".into(),
                });
            }
            match self.attempt(h) {
                Ok(Some((y_new, k_new, stages, err))) => {
                    if err <= 1.0 {
                        self.facold = err.max(1e-4);
                        let fac11 = err.powf(EXPO1);
                        let fac = FACC2.max(FACC1.min(fac11 / SAFE));
                        let mut h_new = (h / fac).min(self.max_step);
                        if self.rejected {
                            h_new = h_new.min(h);
                        }
                        self.rejected = false;
                        self.last = Some(LastStep {
                            t0: self.t,
                            h,
                            y0: self.y,
                            k: stages,
                        });
                        self.dense = None;
                        self.t = if last_step { t_end } else { self.t + h };
                        self.y = y_new;
                        self.k1 = k_new;
                        self.h = h_new;
                        return Ok(());
                    }
                    let fac11 = err.powf(EXPO1);
                    self.h = h / FACC1.min(fac11 / SAFE);
                    self.rejected = true;
                }
                Ok(None) | Err(_) => {
                    // a stage left the domain
                    self.h = 0.25 * h;
                    self.rejected = true;
                }
            }
            rejects += 1;
            if rejects > MAX_REJECTS {
                return Err(Error::StepFailure {
                    t: self.t,
                    reason: "too many rejected steps".into(),
                });
            }
        }
    }

    /// Returns `(y_new, f(y_new), stages, err)`, or `None` if a stage failed.
    #[allow(clippy::type_complexity)]
    fn attempt(&mut self, h: f64) -> Result<Option<([f64; N], [f64; N], [[f64; N]; 8], f64)>> {
        use coeffs::*;
        let (t, y) = (self.t, self.y);
        let k1 = self.k1;
        macro_rules! stage {
            ($c:expr, $terms:expr) => {
                match self.eval(t + $c * h, &axpy(&y, h, $terms)) {
                    Ok(v) => v,
                    Err(_) => return Ok(None),
                }
            };
        }
        let k2 = stage!(C2, &[(A21, &k1)]);
        let k3 = stage!(C3, &[(A31, &k1), (A32, &k2)]);
        let k4 = stage!(C4, &[(A41, &k1), (A43, &k3)]);
        let k5 = stage!(C5, &[(A51, &k1), (A53, &k3), (A54, &k4)]);
        let k6 = stage!(C6, &[(A61, &k1), (A64, &k4), (A65, &k5)]);
        let k7 = stage!(C7, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k8 = stage!(
            C8,
            &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]
        );
        let k9 = stage!(
            C9,
            &[
                (A91, &k1),
                (A94, &k4),
                (A95, &k5),
                (A96, &k6),
                (A97, &k7),
                (A98, &k8)
            ]
        );
        let k10 = stage!(
            C10,
            &[
                (A101, &k1),
                (A104, &k4),
                (A105, &k5),
                (A106, &k6),
                (A107, &k7),
                (A108, &k8),
                (A109, &k9)
            ]
        );
        let k11 = stage!(
            C11,
            &[
                (A111, &k1),
                (A114, &k4),
                (A115, &k5),
                (A116, &k6),
                (A117, &k7),
                (A118, &k8),
                (A119, &k9),
                (A1110, &k10)
            ]
        );
        let k12 = stage!(
            1.0,
            &[
                (A121, &k1),
                (A124, &k4),
                (A125, &k5),
                (A126, &k6),
                (A127, &k7),
                (A128, &k8),
                (A129, &k9),
                (A1210, &k10),
                (A1211, &k11)
            ]
        );
        let incr = combo(&[
            (B1, &k1),
            (B6, &k6),
            (B7, &k7),
            (B8, &k8),
            (B9, &k9),
            (B10, &k10),
            (B11, &k11),
            (B12, &k12),
        ]);
        let y_new = axpy(&y, h, &[(1.0, &incr)]);

        let (mut err5, mut err3) = (0.0, 0.0);
        for i in 0..N {
            let sk = self.scale(y[i], y_new[i]);
            let e3 = incr[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            let e5 = ER1 * k1[i]
                + ER6 * k6[i]
                + ER7 * k7[i]
                + ER8 * k8[i]
                + ER9 * k9[i]
                + ER10 * k10[i]
                + ER11 * k11[i]
                + ER12 * k12[i];
            err3 += (e3 / sk).powi(2);
            err5 += (e5 / sk).powi(2);
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err5 * (1.0 / (N as f64 * deno)).sqrt();
        if !err.is_finite() {
            return Ok(None);
        }
        if err > 1.0 {
            return Ok(Some((y_new, k1, [k1; 8], err)));
        }
        let k_new = match self.eval(t + h, &y_new) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        Ok(Some((
            y_new,
            k_new,
            [k1, k6, k7, k8, k9, k10, k11, k12],
            err,
        )))
    }

    /// Dense-output polynomial of the last accepted step (three extra
    /// right-hand-side evaluations, computed once per step).
    pub fn dense_step(&mut self) -> Result<DenseStep<N>> {
        if let Some(d) = self.dense {
            return Ok(d);
        }
        use coeffs::*;
        let last = self.last.ok_or_else(|| Error::StepFailure {
            t: self.t,
            reason: "no step available for dense output".into(),
        })?;
        let (t0, h, y) = (last.t0, last.h, last.y0);
        let [k1, k6, k7, k8, k9, k10, k11, k12] = last.k;
        let k_new = self.k1;
        let y_new = self.y;

        let k14 = self.eval(
            t0 + C14 * h,
            &axpy(
                &y,
                h,
                &[
                    (A141, &k1),
                    (A147, &k7),
                    (A148, &k8),
                    (A149, &k9),
                    (A1410, &k10),
                    (A1411, &k11),
                    (A1412, &k12),
                    (A1413, &k_new),
                ],
            ),
        )?;
        let k15 = self.eval(
            t0 + C15 * h,
            &axpy(
                &y,
                h,
                &[
                    (A151, &k1),
                    (A156, &k6),
                    (A157, &k7),
                    (A158, &k8),
                    (A1511, &k11),
                    (A1512, &k12),
                    (A1513, &k_new),
                    (A1514, &k14),
                ],
            ),
        )?;
        let k16 = self.eval(
            t0 + C16 * h,
            &axpy(
                &y,
                h,
                &[
                    (A161, &k1),
                    (A166, &k6),
                    (A167, &k7),
                    (A168, &k8),
                    (A169, &k9),
                    (A1613, &k_new),
                    (A1614, &k14),
                    (A1615, &k15),
                ],
            ),
        )?;

        let mut cont = [[0.0; N]; 8];
        for i in 0..N {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            cont[0][i] = y[i];
            cont[1][i] = ydiff;
            cont[2][i] = bspl;
            cont[3][i] = ydiff - h * k_new[i] - bspl;
        }
        let d = [D4, D5, D6, D7];
        for (row, dc) in d.iter().enumerate() {
            for i in 0..N {
                let v = dc[0] * k1[i]
                    + dc[1] * k6[i]
                    + dc[2] * k7[i]
                    + dc[3] * k8[i]
                    + dc[4] * k9[i]
                    + dc[5] * k10[i]
                    + dc[6] * k11[i]
                    + dc[7] * k12[i]
                    + dc[8] * k_new[i]
                    + dc[9] * k14[i]
                    + dc[10] * k15[i]
                    + dc[11] * k16[i];
                cont[4 + row][i] = h * v;
            }
        }
        let step = DenseStep { t0, h, cont };
        self.dense = Some(step);
        Ok(step)
    }
}

#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
mod coeffs {
    pub const C2: f64 = 0.526001519587677318785587544488e-01;
    pub const C3: f64 = 0.789002279381515978178381316732e-01;
    pub const C4: f64 = 0.118350341907227396726757197510e+00;
    pub const C5: f64 = 0.281649658092772603273242802490e+00;
    pub const C6: f64 = 0.333333333333333333333333333333e+00;
    pub const C7: f64 = 0.25e+00;
    pub const C8: f64 = 0.307692307692307692307692307692e+00;
    pub const C9: f64 = 0.651282051282051282051282051282e+00;
    pub const C10: f64 = 0.6e+00;
    pub const C11: f64 = 0.857142857142857142857142857142e+00;
    pub const C14: f64 = 0.1e+00;
    pub const C15: f64 = 0.2e+00;
    pub const C16: f64 = 0.777777777777777777777777777778e+00;

    pub const B1: f64 = 5.42937341165687622380535766363e-2;
    pub const B6: f64 = 4.45031289275240888144113950566e0;
    pub const B7: f64 = 1.89151789931450038304281599044e0;
    pub const B8: f64 = -5.8012039600105847814672114227e0;
    pub const B9: f64 = 3.1116436695781989440891606237e-1;
    pub const B10: f64 = -1.52160949662516078556178806805e-1;
    pub const B11: f64 = 2.01365400804030348374776537501e-1;
    pub const B12: f64 = 4.47106157277725905176885569043e-2;

    pub const BHH1: f64 = 0.244094488188976377952755905512e+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547e+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412e-01;

    pub const ER1: f64 = 0.1312004499419488073250102996e-01;
    pub const ER6: f64 = -0.1225156446376204440720569753e+01;
    pub const ER7: f64 = -0.4957589496572501915214079952e+00;
    pub const ER8: f64 = 0.1664377182454986536961530415e+01;
    pub const ER9: f64 = -0.3503288487499736816886487290e+00;
    pub const ER10: f64 = 0.3341791187130174790297318841e+00;
    pub const ER11: f64 = 0.8192320648511571246570742613e-01;
    pub const ER12: f64 = -0.2235530786388629525884427845e-01;

    pub const A21: f64 = 5.26001519587677318785587544488e-2;
    pub const A31: f64 = 1.97250569845378994544595329183e-2;
    pub const A32: f64 = 5.91751709536136983633785987549e-2;
    pub const A41: f64 = 2.95875854768068491816892993775e-2;
    pub const A43: f64 = 8.87627564304205475450678981324e-2;
    pub const A51: f64 = 2.41365134159266685502369798665e-1;
    pub const A53: f64 = -8.84549479328286085344864962717e-1;
    pub const A54: f64 = 9.24834003261792003115737966543e-1;
    pub const A61: f64 = 3.7037037037037037037037037037e-2;
    pub const A64: f64 = 1.70828608729473871279604482173e-1;
    pub const A65: f64 = 1.25467687566822425016691814123e-1;
    pub const A71: f64 = 3.7109375e-2;
    pub const A74: f64 = 1.70252211019544039314978060272e-1;
    pub const A75: f64 = 6.02165389804559606850219397283e-2;
    pub const A76: f64 = -1.7578125e-2;
    pub const A81: f64 = 3.70920001185047927108779319836e-2;
    pub const A84: f64 = 1.70383925712239993810214054705e-1;
    pub const A85: f64 = 1.07262030446373284651809199168e-1;
    pub const A86: f64 = -1.53194377486244017527936158236e-2;
    pub const A87: f64 = 8.27378916381402288758473766002e-3;
    pub const A91: f64 = 6.24110958716075717114429577812e-1;
    pub const A94: f64 = -3.36089262944694129406857109825e0;
    pub const A95: f64 = -8.68219346841726006818189891453e-1;
    pub const A96: f64 = 2.75920996994467083049415600797e1;
    pub const A97: f64 = 2.01540675504778934086186788979e1;
    pub const A98: f64 = -4.34898841810699588477366255144e1;
    pub const A101: f64 = 4.77662536438264365890433908527e-1;
    pub const A104: f64 = -2.48811461997166764192642586468e0;
    pub const A105: f64 = -5.90290826836842996371446475743e-1;
    pub const A106: f64 = 2.12300514481811942347288949897e1;
    pub const A107: f64 = 1.52792336328824235832596922938e1;
    pub const A108: f64 = -3.32882109689848629194453265587e1;
    pub const A109: f64 = -2.03312017085086261358222928593e-2;
    pub const A111: f64 = -9.3714243008598732571704021658e-1;
    pub const A114: f64 = 5.18637242884406370830023853209e0;
    pub const A115: f64 = 1.09143734899672957818500254654e0;
    pub const A116: f64 = -8.14978701074692612513997267357e0;
    pub const A117: f64 = -1.85200656599969598641566180701e1;
    pub const A118: f64 = 2.27394870993505042818970056734e1;
    pub const A119: f64 = 2.49360555267965238987089396762e0;
    pub const A1110: f64 = -3.0467644718982195003823669022e0;
    pub const A121: f64 = 2.27331014751653820792359768449e0;
    pub const A124: f64 = -1.05344954667372501984066689879e1;
    pub const A125: f64 = -2.00087205822486249909675718444e0;
    pub const A126: f64 = -1.79589318631187989172765950534e1;
    pub const A127: f64 = 2.79488845294199600508499808837e1;
    pub const A128: f64 = -2.85899827713502369474065508674e0;
    pub const A129: f64 = -8.87285693353062954433549289258e0;
    pub const A1210: f64 = 1.23605671757943030647266201528e1;
    pub const A1211: f64 = 6.43392746015763530355970484046e-1;

    pub const A141: f64 = 5.61675022830479523392909219681e-2;
    pub const A147: f64 = 2.53500210216624811088794765333e-1;
    pub const A148: f64 = -2.46239037470802489917441475441e-1;
    pub const A149: f64 = -1.24191423263816360469010140626e-1;
    pub const A1410: f64 = 1.5329179827876569731206322685e-1;
    pub const A1411: f64 = 8.20105229563468988491666602057e-3;
    pub const A1412: f64 = 7.56789766054569976138603589584e-3;
    pub const A1413: f64 = -8.298e-3;
    pub const A151: f64 = 3.18346481635021405060768473261e-2;
    pub const A156: f64 = 2.83009096723667755288322961402e-2;
    pub const A157: f64 = 5.35419883074385676223797384372e-2;
    pub const A158: f64 = -5.49237485713909884646569340306e-2;
    pub const A1511: f64 = -1.08347328697249322858509316994e-4;
    pub const A1512: f64 = 3.82571090835658412954920192323e-4;
    pub const A1513: f64 = -3.40465008687404560802977114492e-4;
    pub const A1514: f64 = 1.41312443674632500278074618366e-1;
    pub const A161: f64 = -4.28896301583791923408573538692e-1;
    pub const A166: f64 = -4.69762141536116384314449447206e0;
    pub const A167: f64 = 7.68342119606259904184240953878e0;
    pub const A168: f64 = 4.06898981839711007970213554331e0;
    pub const A169: f64 = 3.56727187455281109270669543021e-1;
    pub const A1613: f64 = -1.39902416515901462129418009734e-3;
    pub const A1614: f64 = 2.9475147891527723389556272149e0;
    pub const A1615: f64 = -9.15095847217987001081870187138e0;

    // dense output rows: k1, k6, k7, k8, k9, k10, k11, k12, k13 (= f(y_new)), k14, k15, k16
    pub const D4: [f64; 12] = [
        -0.84289382761090128651353491142e+01, 0.56671495351937776962531783590e+00,
        -0.30689499459498916912797304727e+01, 0.23846676565120698287728149680e+01,
        0.21170345824450282767155149946e+01, -0.87139158377797299206789907490e+00,
        0.22404374302607882758541771650e+01, 0.63157877876946881815570249290e+00,
        -0.88990336451333310820698117400e-01, 0.18148505520854727256656404962e+02,
        -0.91946323924783554000451984436e+01, -0.44360363875948939664310572000e+01,
    ];
    pub const D5: [f64; 12] = [
        0.10427508642579134603413151009e+02, 0.24228349177525818288430175319e+03,
        0.16520045171727028198505394887e+03, -0.37454675472269020279518312152e+03,
        -0.22113666853125306036270938578e+02, 0.77334326684722638389603898808e+01,
        -0.30674084731089398182061213626e+02, -0.93321305264302278729567221706e+01,
        0.15697238121770843886131091075e+02, -0.31139403219565177677282850411e+02,
        -0.93529243588444783865713862664e+01, 0.35816841486394083752465898540e+02,
    ];
    pub const D6: [f64; 12] = [
        0.19985053242002433820987653617e+02, -0.38703730874935176555105901742e+03,
        -0.18917813819516756882830838328e+03, 0.52780815920542364900561016686e+03,
        -0.11573902539959630126141871134e+02, 0.68812326946963000169666922661e+01,
        -0.10006050966910838403183860980e+01, 0.77771377980534432092869265740e+00,
        -0.27782057523535084065932004339e+01, -0.60196695231264120758267380846e+02,
        0.84320405506677161018159903784e+02, 0.11992291136182789328035130030e+02,
    ];
    pub const D7: [f64; 12] = [
        -0.25693933462703749003312586129e+02, -0.15418974869023643374053993627e+03,
        -0.23152937917604549567536039109e+03, 0.35763911791061412378285349910e+03,
        0.93405324183624310003907691704e+02, -0.37458323136451633156875139351e+02,
        0.10409964950896230045147246184e+03, 0.29840293426660503123344363579e+02,
        -0.43533456590011143754432175058e+02, 0.96324553959188282948394950600e+02,
        -0.39177261675615439165231486172e+02, -0.14972683625798562581422125276e+03,
    ];
}
