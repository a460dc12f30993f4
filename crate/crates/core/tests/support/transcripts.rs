//! Recorded model answers for the worked examples: prompt specs paired with
//! response text. Ratings, names, strengths, signs and directions follow
//! the published transcripts; quoted justifications are verbatim where one
//! was published, and short paraphrases elsewhere.

use causeway_core::prompts::{
    confounder_prompt, debate_battery, latent_prompt, mediator_prompt, Level, PromptSpec,
};

pub const PFPH: &str = "percent fair or poor health";
pub const LE: &str = "life expectancy";
pub const FEI: &str = "food environment index";
pub const VCR: &str = "violent crime rate";
pub const PCP: &str = "primary care physicians rate";
pub const HEALTH: &str = "public health";
pub const AUTO: &str = "automotive engineering";

fn ratings(specs: Vec<PromptSpec>, scores: [u8; 10], why: [&str; 10]) -> Vec<(PromptSpec, String)> {
    specs
        .into_iter()
        .zip(scores.iter().zip(why))
        .map(|(s, (n, w))| (s, format!("Rating: {n}\n{w}")))
        .collect()
}

pub fn pfph_le() -> Vec<(PromptSpec, String)> {
    ratings(
        debate_battery(PFPH, LE, HEALTH).unwrap(),
        [4, 1, 4, 4, 1, 2, 1, 2, 2, 1],
        [
            "Poor self-rated health reflects chronic disease burden, which directly shortens lifespans.",
            "More people in poor health does not lengthen lives; the relationship runs the other way.",
            "A higher share of residents in fair or poor health is a well-documented driver of lower life expectancy.",
            "Populations reporting better health consistently live longer.",
            "Better reported health does not reduce life expectancy.",
            "Life expectancy summarizes mortality; it may shape health perceptions only weakly, so causation is doubtful.",
            "Longer lives do not plausibly increase the share of people in poor health in a meaningful way.",
            "Older populations report somewhat more poor health, but this is doubtful as a direct cause.",
            "Shorter lives may coincide with worse health, though the direction is doubtful.",
            "Lower life expectancy does not cause better health.",
        ],
    )
}

fn cyl_disp(cyl: &str, disp: &str) -> Vec<(PromptSpec, String)> {
    ratings(
        debate_battery(cyl, disp, AUTO).unwrap(),
        [4, 4, 1, 1, 4, 2, 2, 1, 1, 2],
        [
            "Engine displacement is the total swept volume of all cylinders, so the cylinder count determines it directly.",
            "Adding cylinders adds swept volume, increasing displacement.",
            "More cylinders cannot reduce total displacement for comparable bore and stroke.",
            "Fewer cylinders cannot raise displacement for comparable bore and stroke.",
            "Fewer cylinders mean less total swept volume.",
            "Designers may pick a cylinder count to reach a target displacement, but displacement is an outcome of the layout.",
            "A larger displacement target can call for more cylinders, a doubtful design-driven link.",
            "Higher displacement does not lead to fewer cylinders.",
            "Lower displacement does not lead to more cylinders.",
            "Small displacement targets can favor fewer cylinders, though this is doubtful as causation.",
        ],
    )
}

/// The debate example with the paper's capitalized variable names.
pub fn cylinders_displacement() -> Vec<(PromptSpec, String)> {
    cyl_disp("Cylinders", "Displacement")
}

pub fn confounders() -> (PromptSpec, String) {
    let spec = confounder_prompt(FEI, VCR, (Level::Lower, Level::Higher), HEALTH).unwrap();
    let text = "\
(Socioeconomic Status; strong; Low-income communities have fewer healthy food outlets and also experience more violent crime.)
(Residential Segregation; strong; Segregated neighborhoods concentrate poverty, limiting food access while raising crime rates.)
(Substance Abuse and Mental Health Issues; medium; Substance abuse and mental health issues can contribute to both a lower food environment index (due to prioritization of immediate needs over healthy food choices) and higher rates of violent crime, as these issues can lead to unstable social environments.)
(Availability of Public Services; medium; Underfunded areas lack both grocery infrastructure and crime prevention services.)
(Racial and Ethnic Composition; medium; Historical disinvestment patterns affect both food environments and policing and crime outcomes.)
(Neighborhood Disorganization; medium; Weak local institutions deter food retailers and fail to curb violence.)
";
    (spec, text.to_owned())
}

pub fn mediators() -> (PromptSpec, String) {
    let spec = mediator_prompt(FEI, VCR, (Level::Lower, Level::Higher), HEALTH).unwrap();
    let text = "\
(Economic Disadvantage; strong; Poor food environments coincide with and deepen local economic hardship, which raises the incidence of violent crime.; Areas with few employers and low incomes; positive)
(Social Cohesion; medium; A lower food environment index may contribute to reduced social cohesion within a community, as limited access to nutritious food options can lead to increased stress and poorer overall health. Reduced social cohesion has been associated with higher rates of violent crime, as it may lead to weaker community bonds and less effective informal social control.; Communities with little shared public space; negative)
(Substance Abuse; medium; Food insecurity and stress increase substance use, which is linked to violence.; Where treatment services are scarce; positive)
(Educational Attainment; medium; Poor nutrition harms school performance, and lower attainment is associated with more violent crime.; Among school-age children; negative)
(Mental Health; medium; Inadequate diets worsen mental health, which can increase the risk of violent behavior.; Where mental health care is limited; negative)
";
    (spec, text.to_owned())
}

pub fn latents() -> (PromptSpec, String) {
    let spec = latent_prompt(PCP, HEALTH).unwrap();
    let text = "\
(Reimbursement Rates; strong; positive; Higher reimbursement rates for primary care services can make the field more financially appealing, attracting more physicians to primary care and directly influencing the primary care physician rate.)
(Medical Infrastructure Investment; medium; positive; Investment in clinics and hospitals creates positions and attracts physicians to the area.)
(Healthcare Policy Reforms; medium; positive; Reforms that expand coverage and support primary care increase demand and funding for physicians.)
(Medical Student Debt; strong; negative; high levels of debt from medical education can deter graduates from entering lower-paying specialties like primary care.)
(Urbanization Incentives; medium; negative; Incentives that draw physicians to cities reduce the supply available to other areas.)
";
    (spec, text.to_owned())
}

/// Answers for the end-to-end walk through the car data set, keyed by the
/// data set's own column names.
pub fn autompg() -> Vec<(PromptSpec, String)> {
    let mut out = cyl_disp("cylinders", "displacement");
    out.extend(ratings(
        debate_battery("displacement", "weight", AUTO).unwrap(),
        [3, 3, 1, 1, 3, 2, 2, 1, 1, 2],
        [
            "Bigger engines are heavier and need heavier supporting structure.",
            "Larger displacement adds engine and drivetrain mass.",
            "Larger engines do not make cars lighter.",
            "Smaller engines do not make cars heavier.",
            "Smaller engines weigh less.",
            "Heavier cars are often fitted with bigger engines, but this is a design choice rather than a cause.",
            "Heavier cars may be given larger engines to keep performance acceptable.",
            "Heavier cars do not get smaller engines.",
            "Lighter cars do not get larger engines.",
            "Lighter cars can be fitted with smaller engines.",
        ],
    ));
    let levels = (Level::Higher, Level::Lower);
    out.push((
        confounder_prompt("weight", "acceleration", levels, AUTO).unwrap(),
        "\
(Vehicle Class; medium; Trucks and large sedans are heavy and were built with modest acceleration targets.)
(Engine Technology; weak; Newer engine designs can change both the mass of the car and its acceleration.)
"
        .to_owned(),
    ));
    out.push((
        mediator_prompt("weight", "acceleration", levels, AUTO).unwrap(),
        "\
(Torque; strong; Heavier cars need more torque; raising engine torque offsets the mass and shortens the time needed to reach speed.; When the powertrain can deliver more torque at low engine speed; positive)
(Gear Ratios; medium; Shorter gearing multiplies torque at the wheels, reducing time to speed for heavy cars.; Manual or multi-speed automatic transmissions; positive)
"
        .to_owned(),
    ));
    out.push((
        latent_prompt("weight", AUTO).unwrap(),
        "\
(Material Choice; strong; negative; Aluminium and composite structures reduce vehicle mass compared with steel.)
(Safety Regulations; medium; positive; Crash-protection requirements add reinforcement and equipment mass.)
"
        .to_owned(),
    ));
    out
}

/// Every recorded answer.
pub fn all() -> Vec<(PromptSpec, String)> {
    let mut out = pfph_le();
    out.extend(cylinders_displacement());
    out.push(confounders());
    out.push(mediators());
    out.push(latents());
    out.extend(autompg());
    out
}
