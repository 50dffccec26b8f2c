use super::{Proposal, RankedProposal, UtilityError, UtilityModel};
use crate::ontology::MatchDegree;

/// Scores every proposal and orders them by score descending, then match
/// degree descending, then service id ascending.
pub fn rank_services(
    proposals: &[(Proposal, MatchDegree)],
    model: &UtilityModel,
) -> Result<Vec<RankedProposal>, UtilityError> {
    let mut ranked = proposals
        .iter()
        .map(|(p, degree)| {
            Ok(RankedProposal {
                score: model.score(&p.offered_attributes)?,
                degree: *degree,
                proposal: p.clone(),
            })
        })
        .collect::<Result<Vec<_>, UtilityError>>()?;
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.degree.cmp(&a.degree))
            .then_with(|| a.proposal.service_id.cmp(&b.proposal.service_id))
    });
    Ok(ranked)
}
