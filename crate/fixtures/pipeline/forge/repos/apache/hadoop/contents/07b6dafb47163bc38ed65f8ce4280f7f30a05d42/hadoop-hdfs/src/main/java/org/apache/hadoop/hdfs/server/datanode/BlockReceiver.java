package org.apache.hadoop.hdfs.server.datanode;

import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class BlockReceiver {

  private static final Logger LOG = LoggerFactory.getLogger(BlockReceiver.class);

  private final ExtendedBlock block;

  BlockReceiver(ExtendedBlock block) {
    this.block = block;
  }

  void receiveBlock(long size) {
    writeData(size);
    LOG.info("Block {} received, {} bytes", block.getBlockId(), size);
  }

  void close() {
    flushChecksums();
    LOG.debug("Closed receiver for {}", block);
  }

  void abort() {
    cleanup();
  }

  private void writeData(long size) {
  }

  private void flushChecksums() {
  }

  private void cleanup() {
  }
}
