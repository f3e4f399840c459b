#pragma once

// Fixed heteroscedastic regression dataset used by the Monte Carlo agreement
// tests: n = 50, x drawn uniform on (-3, 3), y = 1 + x + e with
// sd(e) = exp(0.2 x). All 50 (x, y) pairs are distinct, so the clustered
// design has 50 singleton rows. The values are frozen at full precision so
// the tests are deterministic.

namespace mdpreg::testdata {

inline constexpr double kHetX[50] = {
    -1.3853734410041401, -0.036622339803631832, -2.7053408275193345, 0.74860199000806649,
    1.9250341081390312, 1.4866317832506404, 2.5143449907372792, -2.0967035007615618,
    2.136212534649875, 1.2189025247450234, -1.2443974168627141, -1.5244343597973393,
    -1.9684712530564747, -0.92249641350631562, 1.8002742604497524, -0.52562861663189242,
    0.87891450505894397, -2.4453660687107623, -0.48700221487424322, -0.22234079729337797,
    -1.1597995459395156, -1.7836501523258277, -2.916648046983993, 1.9569238448080011,
    -1.0620358539955335, -1.9907472859659781, 2.7961011863271512, -1.1155647504953219,
    2.218090392704811, 2.5531622747081286, -1.116706986754691, 2.7786329052235121,
    1.2680636332649833, -1.8771644664498321, 2.3933320934249096, -1.379115296269168,
    2.4511108382615285, -0.80231292870208737, 1.3098777570173983, 2.5050389052417632,
    0.95367631549760024, 0.68039804017813843, 1.6878431486278824, 2.6246594862318711,
    0.22740796685607556, 0.99664893003479449, 1.7253015051159446, -1.9577890308637635,
    0.43976459618632013, -1.0006440455184402
};

inline constexpr double kHetY[50] = {
    -1.1944039980604171, 0.97920457315933451, -1.0876970642594599, 0.17593162745359181,
    1.8871515361036855, 2.3598430176319618, 3.9321674113388059, -1.2232889022422075,
    5.122284414343639, 2.745621437782837, -0.70307612915088735, -0.31056189180932636,
    -1.068832598881013, -1.2475027773172425, 4.0294723258549823, -0.77639914874946103,
    1.3952344502474505, -2.1501943859098551, 1.4647294965597963, 0.84238461872905279,
    1.0479076700671279, -1.0613001887402826, -2.8606357205451762, 2.8274565818425077,
    0.034788385002735331, -0.78872496981994555, 6.4168533116523214, 0.06071355026536987,
    5.05841015009013, 2.4848764528001031, 0.52753478718156066, 0.87909887642975626,
    1.5860996997288943, -0.75929114021202004, 5.129206404226009, -0.41825844004625956,
    1.827001779427452, 0.43015236874350088, 3.715937460625601, 4.2775752066130481,
    0.33431637340176512, 3.3057748661199691, 3.5279423086700152, 3.0445727848359567,
    0.43320157467323184, 2.2758785734236198, 2.5115484018571168, -0.68526674555984157,
    1.7233639756237307, 0.39243997543260378
};

}  // namespace mdpreg::testdata
