// Generated by tools/gen_airy_coeffs.py; do not edit by hand.

pub(super) const AI_POS_SCALED_RANGE: (f64, f64) = (3.5, 8.75);
pub(super) const AI_POS_SCALED: [f64; 26] = [
    1.9845009616909997,
    0.004868971145160392,
    -0.0012790156834345864,
    0.00031265707758130833,
    -7.346646356918716e-05,
    1.683539426788099e-05,
    -3.792202093537696e-06,
    8.437167356638836e-07,
    -1.860123381068791e-07,
    4.073031845831615e-08,
    -8.872671082688555e-09,
    1.9253282622337435e-09,
    -4.165793978110683e-10,
    8.994370686002211e-11,
    -1.9390636625295725e-11,
    4.1761533396539e-12,
    -8.98869134241157e-13,
    1.9341535957062569e-13,
    -4.1617059181456104e-14,
    8.956265506471921e-15,
    -1.9280959066001265e-15,
    4.152717269383903e-16,
    -8.949149383117687e-17,
    1.9297908477021073e-17,
    -4.1643082859682744e-18,
    8.992859864245582e-19,
];

pub(super) const AIP_POS_SCALED_RANGE: (f64, f64) = (3.5, 8.75);
pub(super) const AIP_POS_SCALED: [f64; 27] = [
    2.0219356030757885,
    -0.006949192990395684,
    0.001843901077692518,
    -0.0004558677464565955,
    0.0001084484948334469,
    -2.518326825344971e-05,
    5.7527173490173745e-06,
    -1.2988648783433925e-06,
    2.907681363521118e-07,
    -6.468070605368374e-08,
    1.4319964412962744e-08,
    -3.1591367947240474e-09,
    6.951072437758713e-10,
    -1.5265124457187983e-10,
    3.34776762028214e-11,
    -7.335109336673942e-12,
    1.6062165670116178e-12,
    -3.5161398856149793e-13,
    7.696369279043417e-14,
    -1.6847536228047076e-14,
    3.688709863311658e-15,
    -8.078746673233438e-16,
    1.7700199166715165e-16,
    -3.879732468577415e-17,
    8.508104922450526e-18,
    -1.866739933382328e-18,
    4.0979139636574974e-19,
];

pub(super) const AI_NEG_RANGE: (f64, f64) = (-9.75, -6.0);
pub(super) const AI_NEG: [f64; 31] = [
    -0.020905686166208554,
    -0.2352776739807811,
    -0.028524489783111,
    -0.21061081456323097,
    0.015867870814260422,
    0.19590358861062396,
    -0.02190192586905728,
    -0.04558035382752413,
    0.007887110873131478,
    0.004952251683952405,
    -0.0012383018290269276,
    -0.0002780148620973089,
    0.00010798799835625895,
    5.805130505054805e-06,
    -5.808340383243287e-06,
    2.6890797914536427e-07,
    1.9753775359539167e-07,
    -2.624354010483785e-08,
    -3.848855516100015e-09,
    1.0564549959818355e-09,
    1.1553622737623912e-11,
    -2.5802402204775564e-11,
    1.8050272908627243e-12,
    3.7912887114435746e-13,
    -6.320132786325173e-14,
    -1.8567576664071987e-15,
    1.1801761375717318e-15,
    -5.827087334148694e-17,
    -1.3001588390644162e-17,
    1.7353356367330388e-18,
    4.7455875575917254e-20,
];

pub(super) const AIP_NEG_RANGE: (f64, f64) = (-9.75, -6.0);
pub(super) const AIP_NEG: [f64; 31] = [
    -0.1760677077567832,
    -0.07792805548786877,
    0.07489514448938328,
    -0.017075810617231964,
    0.7488497510917224,
    -0.08477872609140975,
    -0.2959693881649387,
    0.05539359947055684,
    0.04436392041390811,
    -0.01190974664683178,
    -0.0031776957520349746,
    0.0012988061961221153,
    8.434529657345001e-05,
    -8.344018283799923e-05,
    3.847486903356712e-06,
    3.29770021843386e-06,
    -4.55040762969116e-07,
    -7.36107762608245e-08,
    2.084209759861032e-08,
    2.872496482957846e-10,
    -5.687236532882114e-10,
    4.077236322647449e-11,
    9.250156098761232e-12,
    -1.5856105324374414e-12,
    -5.1138873313669566e-14,
    3.234346086180291e-14,
    -1.6253355428109298e-15,
    -3.867573535197881e-16,
    5.2865609423893807e-17,
    1.5567530807842219e-18,
    -8.141062723815269e-19,
];

#[cfg(test)]
pub(super) const AIRY_REFERENCE: &[(f64, f64, f64)] = &[
    (-15.0, 0.2782174908708289, 0.272374204308642),
    (-12.5, -0.27627456138116024, -0.41933133041950515),
    (-9.9, 0.13623502644797944, 0.9078133315371509),
    (-9.75, 0.25262476259634337, 0.6160957851685245),
    (-9.5, 0.3191032477191282, -0.10809531881187123),
    (-8.0, -0.0527050503563862, 0.9355609381983065),
    (-7.0, 0.18428083525050565, -0.7710081684101265),
    (-6.01, -0.3325053888233103, 0.3260684069503672),
    (-5.99, -0.3255874806297948, 0.3655621087630607),
    (-5.0, 0.35076100902411433, 0.32719281855444315),
    (-4.0, -0.07026553294928951, -0.7906285753685813),
    (-3.0, -0.37881429367765806, 0.3145837692165988),
    (-2.0, 0.22740742820168558, 0.618259020741691),
    (-1.0, 0.5355608832923521, -0.01016056711664521),
    (-0.5, 0.4757280916105396, -0.20408167033954738),
    (0.0, 0.3550280538878172, -0.2588194037928068),
    (0.5, 0.23169360648083348, -0.2249105326646839),
    (1.0, 0.13529241631288141, -0.1591474412967932),
    (2.0, 0.03492413042327438, -0.05309038443365363),
    (3.0, 0.006591139357460719, -0.011912976705951319),
    (3.49, 0.00263459764155552, -0.005095607611215417),
    (3.51, 0.0025345043850378926, -0.004914713480638684),
    (5.0, 0.00010834442813607442, -0.0002474138908684625),
    (7.0, 7.492128863997167e-07, -2.008150894738792e-06),
    (8.7, 6.082608218774557e-09, -1.811187604617616e-08),
    (8.8, 4.512440519153694e-09, -1.35113493599557e-08),
    (10.0, 1.1047532552898686e-10, -3.5206336767389237e-10),
    (14.0, 9.920205491192377e-17, -3.729310110017901e-16),
    (20.0, 1.6916728686705404e-27, -7.586391625748354e-27),
    (25.0, 8.116026824691387e-38, -4.066089337243281e-37),
    (30.0, 3.2082175915504954e-49, -1.759876581432726e-48),
];
