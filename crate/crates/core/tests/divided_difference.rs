//! Divided differences of `exp` against values computed at 90 significant
//! digits (textbook recursion in extended precision), frozen here.

use sho_rake::kernel::exp_divided_difference;

const CASES: &[(&[f64], f64)] = &[
    (&[-2.738102232450907, -2.20113806959752], 0.08563723394444832),
    (&[-15.15788319525413, -106.86998598004533], 2.848316986377624e-09),
    (&[-4.921587269377289, -4.921587274298877], 0.007287554331921528),
    (&[-1.2378461441296214, -1.2378454896330309], 0.29000827646299054),
    (&[-15.356450388075892, -6.386272011402603], 0.00018776775082427038),
    (&[-4.529382718853908, -3.4829936868773723, -4.546647312540803], 0.007850096918750708),
    (&[-38.071093126564506, -61.312303491752175, -191.6239327260308], 8.192524357710663e-21),
    (&[-0.17806579201221773, -0.17806579219028354, -0.1780657923683493], 0.4184436805124727),
    (&[-0.10572634877823243, -0.10572642549789034, -0.10572734163510922], 0.44983524482700876),
    (&[-49.17495946777173, -20.93903036062367, -46.72468921571298], 1.1069151778866581e-12),
    (&[-4.048958686010354, -3.790284931673926, -4.849587053876057, -2.6803276938835774], 0.0038012391898304436),
    (&[-111.89377666866864, -31.514574296293603, -96.17517704718466, -71.94165841616459], 9.793511204271755e-20),
    (&[-5.002268477932084, -5.002268482934353, -5.002268487936621, -5.00226849293889], 0.0011204465646961238),
    (&[-1.0126514896691325, -1.0126518480030964, -1.0126504090164947, -1.0126504129456124], 0.06054244987646238),
    (&[-3.7881447778925974, -11.07047081761278, -32.65975306414475, -37.3683754115652], 3.2025405109491106e-06),
    (&[-3.5548002634289895, -4.648882502200371, -1.168560567947965, -2.9980009754075447, -0.767081890594107], 0.003591062719340241),
    (&[-122.6972936588131, -8.391523336037295, -30.538045339439122, -199.8910125888859, -158.05651705407777], 3.1256920017788326e-12),
    (&[-0.8972807189581857, -0.8972807198554665, -0.8972807207527471, -0.8972807216500279, -0.8972807225473087], 0.016986530863661694),
    (&[-1.5900372112411183, -1.5900383771102244, -1.590039025882313, -1.5900379130491762, -1.5900376149372832], 0.008496577371165099),
    (&[-35.16234272324215, -45.20706909063064, -31.707790599515864, 3.024191912657024, -8.307771565343266], 2.8385849548096446e-05),
    (&[-4.410041602902246, -3.7680602555343503, -4.494768455216475, -4.7005329852946165, -1.0148924407801294, -4.1116093590081695], 0.00022401166523001493),
    (&[-88.14097167792103, -110.51502449979569, -161.8631169419268, -53.62115685712993, -173.80658325667605, -71.25697525776658], 1.1451185079115671e-32),
    (&[-8.834920123602943, -8.834920132437864, -8.834920141272782, -8.834920150107704, -8.834920158942625, -8.834920167777543], 1.2130024739524996e-06),
    (&[-1.737733722529391, -1.7377336086707826, -1.7377322064026246, -1.737732541437731, -1.7377335399704372, -1.7377323785305114], 0.0014659896400277827),
    (&[-38.41093782110583, -28.314894961037012, -3.0092704064323215, -14.699038887524672, -44.48169862988644, 4.411593363059481], 8.464388125850695e-06),
    (&[-3.933783157112387, -3.7086122106918977, -1.1365515511358844, -3.35522287226135, -3.518376187005268, -4.633007233057879, -4.549414135190349], 4.338807357427131e-05),
    (&[-83.45304036648959, -151.39741597248752, -79.74323128361225, -125.65919068135436, -109.3583790552302, -8.173065502537412, -103.25509334749098], 3.2348332927665796e-16),
    (&[-4.2542875457005245, -4.254287549954812, -4.2542875542091, -4.254287558463387, -4.254287562717675, -4.254287566971962, -4.25428757122625], 1.9726675133094057e-05),
    (&[-0.40042363093790145, -0.40042368832269515, -0.40042217974587113, -0.4004223609894341, -0.40042349759620016, -0.4004236169920011, -0.4004225177445534], 0.000930606268739056),
    (&[1.7222692852185304, -39.18756125283562, 2.257471876975494, -1.4795635153473086, -16.805618186910607, -26.81985268289532, -44.28881752492786], 1.2184858288052714e-06),
];

#[test]
fn divided_difference_matches_extended_precision() {
    for (z, want) in CASES {
        let got = exp_divided_difference(z);
        let rel = ((got - want) / want).abs();
        assert!(rel < 1e-12, "nodes {z:?}: {got:e} vs {want:e} (rel {rel:e})");
    }
}
