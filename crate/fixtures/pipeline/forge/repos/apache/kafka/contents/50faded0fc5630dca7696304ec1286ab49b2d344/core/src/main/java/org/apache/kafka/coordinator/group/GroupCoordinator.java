package org.apache.kafka.coordinator.group;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class GroupCoordinator {

  private static final Logger log = LoggerFactory.getLogger(GroupCoordinator.class);

  private final GroupMetadataManager groupManager;

  public GroupCoordinator(GroupMetadataManager groupManager) {
    this.groupManager = groupManager;
  }

  public void prepareRebalance(String groupId, String reason) {
    GroupMetadata group = groupManager.getGroup(groupId);
    group.transitionTo(GroupState.PREPARING_REBALANCE);
    log.info("Preparing to rebalance group {} with old generation {} (reason: {})", groupId, group.generationId(), reason);
    groupManager.storeGroup(group);
  }
}
