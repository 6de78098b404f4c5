package org.apache.hadoop.hdfs.server.datanode;

import java.io.IOException;
import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class DataNode {

  private static final Logger LOG = LoggerFactory.getLogger(DataNode.class);

  private final BlockReporter reporter;

  public DataNode(BlockReporter reporter) {
    this.reporter = reporter;
  }

  void reportBadBlock(ExtendedBlock block, IOException e) {
    try {
      reporter.reportBadBlock(block);
    } catch (IOException ioe) {
      LOG.warn("Failed to report bad block " + block, ioe);
    }
  }

  long capacity() {
    return reporter.capacity();
  }
}
