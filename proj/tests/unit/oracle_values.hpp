// Generated by tests/oracles/gen_oracles.py. Do not edit.
#pragma once

namespace oracle {

inline constexpr unsigned long long kPerlinSeed = 5935390382049949455ULL;
inline constexpr double kPerlinX[] = {0.5, 1.25, -3.3, 10.01};
inline constexpr double kPerlinY[] = {0.5, -0.75, 2.9, 7.77};
inline constexpr double kPerlinValue[] = {0.0, -0.06975746154785156, 0.21450947328000014, 0.20077317934447464};

inline constexpr double kSg9Cubic4[] = {-0.09090909090908728, 0.06060606060606022, 0.16883116883116578, 0.23376623376622957, 0.25541125541125087, 0.23376623376622985, 0.1688311688311659, 0.060606060606059386, -0.09090909090908983};
inline constexpr double kSg9Cubic0[] = {-0.07070707070706739, 0.08080808080807761, 0.08080808080807801, -1.201718473520941e-15, -0.09090909090908922, -0.12121212121211676, -0.020202020202015586, 0.2828282828282839, 0.8585858585858505};
inline constexpr double kSg5Quad2[] = {-0.08571428571428552, 0.3428571428571427, 0.48571428571428577, 0.3428571428571431, -0.08571428571428619};

inline constexpr double kBwFreqs[] = {0.5, 1.0, 2.5, 4.0, 6.0, 10.0};
inline constexpr double kBwGainDb[] = {-8.582045365407787e-06, -0.002267240083249774, -3.0102999566398116, -18.335614174088068, -36.87436902924003, -78.11583390045512};

inline constexpr double kGaeRewards[] = {-1.6038368053963015, 0.06409991400376411, 0.7408912958767259, 0.15261919356565307, 0.8637438913233318, 2.913099222503971, -1.4788233606644015, 0.9454729746458599, -1.6661354573179643, 0.34374458145267967, -0.5124437092848577, 1.3237589566885721};
inline constexpr double kGaeValues[] = {-0.8602801935850233, 0.5194931990183601, -1.265143717549522, -2.1591390112963427, 0.434733949991724, 1.7332893199459019, 0.5201341562355202, -1.0021657937544401, 0.26834554039213576, 0.7671747004800961, 1.1912720267866572, -1.1574108072969482};
inline constexpr double kGaeFinalValues[] = {0.6962793952555424, 0.3513836857921296, -0.03241508301125762, 0.013181579118739723, -0.6792499696951128, -0.6205320275267293, 1.33121421656793, 0.25883851276767456, -0.4814839171196073, -2.491789618298251, -0.8765637740699862, -0.5055091274868608};
inline constexpr unsigned char kGaeTerminated[] = {0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
inline constexpr unsigned char kGaeTruncated[] = {0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
inline constexpr double kGaeBootstrap = 0.37;
inline constexpr double kGaeAdvantages[] = {0.6650273595561831, 0.9508619929178996, 2.8269511518410657, 3.1456286651761793, 0.42900994133160786, -1.1664948098806673, -3.042251490815419, -0.05438579276831579, -2.4111500756585116, 0.5946267389991555, -0.17150712226711207, 2.8474697639855204};

// rover x, y, yaw, target x, y, yaw, a0, a1, prev0, prev1, reward
inline constexpr double kRewardCases[][11] = {
    {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.1, 0.0, 2.2},
    {0.0, 0.0, 0.3, 0.15, -0.05, 0.5, 0.2, -0.1, 0.25, 0.0, 0.7740086773697131},
    {1.0, 2.0, -2.0, 0.5, 2.5, 3.0, -1.0, 1.0, 1.0, -1.0, -0.5404489767719035},
    {0.0, 0.0, 3.1, -0.01, 0.0, -3.1, 0.0, 0.0, 0.0, 0.0, 1.9911311759842665},
};

inline constexpr double kLemniscateLength = 7.866172662876359;
inline constexpr double kLissajousLength = 20.57255811512949;

}  // namespace oracle
